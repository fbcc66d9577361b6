#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracle.hpp"
#include "pls/data.hpp"
#include "pls/errors.hpp"
#include "pls/eval.hpp"
#include "pls/rng.hpp"

using pls::Matrix;
using pls::Model;

namespace {

// Straight transcription of the binned definition, one pass per bin.
double reference_ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t bins) {
  double total = 0.0;
  const double n = static_cast<double>(conf.size());
  for (std::size_t b = 0; b < bins; ++b) {
    double c_sum = 0.0;
    double a_sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < conf.size(); ++i) {
      std::size_t idx = static_cast<std::size_t>(std::floor(conf[i] * static_cast<double>(bins)));
      if (idx >= bins) idx = bins - 1;
      if (idx != b) continue;
      c_sum += conf[i];
      a_sum += correct[i] ? 1.0 : 0.0;
      count += 1.0;
    }
    if (count > 0) total += count / n * std::abs(a_sum / count - c_sum / count);
  }
  return total;
}

// Linear model: one identity trunk layer followed by a fixed logit head.
Model linear_model(const Matrix& logit_head) {
  const std::size_t d = logit_head.cols();
  pls::DenseLayer layer{Matrix::identity(d), Matrix(d, 1)};
  return Model({layer}, logit_head, Matrix(logit_head.rows(), d), pls::SmoothingHeadMode::Distribution);
}

pls::Dataset blobs(std::uint64_t seed, std::size_t k = 3, std::size_t per_class = 60) {
  pls::BlobSpec spec;
  spec.seed = seed;
  spec.num_classes = k;
  spec.per_class = per_class;
  spec.dim = 6;
  return pls::gen_blobs(spec);
}

}  // namespace

TEST_CASE("ece: hand-enumerated fixture") {
  const std::vector<double> conf = {0.95, 0.95, 0.65, 0.65};
  const std::vector<bool> ok = {true, true, true, false};
  const double expected = 2.0 / 4.0 * std::abs(1.0 - 0.95) + 2.0 / 4.0 * std::abs(0.5 - 0.65);
  const auto r = pls::ece(conf, ok, 15);
  CHECK(std::abs(r.ece - expected) < 1e-12);
  CHECK(std::abs(r.ece - 0.1) < 1e-12);
  REQUIRE(r.bins.size() == 15);
  CHECK(r.bins[14].count == 2);
  CHECK(r.bins[9].count == 2);
  CHECK(r.bins[9].accuracy == 0.5);
}

TEST_CASE("ece: perfectly calibrated and confident fixtures") {
  const std::vector<double> one = {1.0, 1.0, 1.0};
  CHECK(pls::ece(one, {true, true, true}).ece == 0.0);

  // Bin means equal bin accuracies: 10 at 0.7 with 7 correct, 4 at 0.25 with 1 correct.
  std::vector<double> conf(10, 0.7);
  std::vector<bool> ok = {true, true, true, true, true, true, true, false, false, false};
  for (int i = 0; i < 4; ++i) conf.push_back(0.25);
  for (bool b : {true, false, false, false}) ok.push_back(b);
  CHECK(std::abs(pls::ece(conf, ok).ece) < 1e-12);
}

TEST_CASE("ece: random fixtures lie in [0,1] and match the reference") {
  pls::Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 200);
    std::vector<double> conf(n);
    std::vector<bool> ok(n);
    for (std::size_t i = 0; i < n; ++i) {
      conf[i] = trial % 10 == 0 ? std::round(rng.uniform() * 15.0) / 15.0 : rng.uniform();
      ok[i] = rng.uniform() < 0.6;
    }
    const auto r = pls::ece(conf, ok, 15);
    CHECK(r.ece >= 0.0);
    CHECK(r.ece <= 1.0);
    CHECK(std::abs(r.ece - reference_ece(conf, ok, 15)) < 1e-12);
    std::size_t total = 0;
    for (const auto& b : r.bins) {
      total += b.count;
      CHECK(b.lower < b.upper);
    }
    CHECK(total == n);
  }
}

TEST_CASE("ece: contract errors") {
  CHECK_THROWS_AS(pls::ece(std::vector<double>{0.5, 0.5}, {true}), pls::ContractError);
  CHECK_THROWS_AS(pls::ece(std::vector<double>{1.5}, {true}), pls::ContractError);
}

TEST_CASE("error_rate examples") {
  const Matrix logits{{2, 1, 0}, {0, 3, 1}, {0, 0, 5}, {4, 1, 0}};
  const std::size_t labels[] = {0, 1, 2, 1};
  CHECK(pls::error_rate(logits, labels) == 0.25);
  const std::size_t right[] = {0, 1, 2, 0};
  CHECK(pls::error_rate(logits, right) == 0.0);
  const std::size_t wrong[] = {1, 2, 0, 2};
  CHECK(pls::error_rate(logits, wrong) == 1.0);
  CHECK(pls::argmax_row(std::vector<double>{1, 3, 3}) == 1);
  CHECK_THROWS_AS(pls::error_rate(Matrix(0, 3), std::span<const std::size_t>{}), pls::ContractError);
  const pls::Dataset empty{Matrix(0, 3), {}, 3, "empty"};
  CHECK_THROWS_AS(pls::error_rate(linear_model(Matrix::identity(3)), empty), pls::ContractError);
}

TEST_CASE("temperature scaling never changes predictions") {
  pls::Rng rng(4);
  const auto ds = blobs(4);
  const Model model = Model::initialize({6, {8, 5}, 3, pls::SmoothingHeadMode::Distribution}, rng);
  const auto base = pls::predict(model, ds.inputs);
  const double err = pls::error_rate(model, ds);
  for (double t : pls::default_temperature_grid()) {
    const auto scaled = pls::predict(model, ds.inputs, t);
    CHECK(scaled.predicted == base.predicted);
    CHECK(pls::error_rate(scaled.probs, ds.labels) == err);
  }
}

TEST_CASE("temperature search returns the grid argmin, smallest on ties") {
  const auto grid = pls::default_temperature_grid();
  REQUIRE(grid.size() == 40);
  CHECK(grid.front() == doctest::Approx(0.05));
  CHECK(grid.back() == doctest::Approx(2.0));

  pls::Rng rng(5);
  const auto ds = blobs(5);
  for (int trial = 0; trial < 5; ++trial) {
    Model model = Model::initialize({6, {8, 5}, 3, pls::SmoothingHeadMode::Distribution}, rng);
    const auto ts = pls::temperature_search(model, ds, grid);
    double best = 1e300;
    double best_t = 0.0;
    for (double t : grid) {
      const auto p = pls::predict(model, ds.inputs, t);
      std::vector<bool> ok(ds.size());
      for (std::size_t i = 0; i < ds.size(); ++i) ok[i] = p.predicted[i] == ds.labels[i];
      const double e = reference_ece(p.winning_scores, ok, 15);
      if (e < best - 1e-15) {
        best = e;
        best_t = t;
      }
    }
    CHECK(ts.temperature == best_t);
    CHECK(std::abs(ts.ece_at_best - best) < 1e-12);
    CHECK(ts.grid_ece.size() == grid.size());
  }

  // Constant logits: every t gives the same ECE, so the smallest grid value wins.
  const Model flat = linear_model(Matrix(3, 6));
  const std::vector<double> custom = {0.5, 1.0, 1.5};
  CHECK(pls::temperature_search(flat, ds, custom).temperature == 0.5);
  CHECK_THROWS_AS(pls::temperature_search(flat, ds, std::vector<double>{}), pls::ConfigError);
}

TEST_CASE("temperature search returns 1 when it is already the ECE minimum") {
  const auto ds = blobs(6);
  pls::Rng rng(6);
  const Model model = Model::initialize({6, {8, 5}, 3, pls::SmoothingHeadMode::Distribution}, rng);
  const auto full = pls::temperature_search(model, ds, pls::default_temperature_grid());
  const std::vector<double> around = {full.temperature};
  CHECK(pls::temperature_search(model, ds, around).temperature == full.temperature);
  const std::vector<double> with_one = {1.0};
  CHECK(pls::temperature_search(model, ds, with_one).temperature == 1.0);
}

TEST_CASE("histogram examples") {
  // Uniform predictor over K=10: every winning score is 0.1.
  const pls::Dataset ds{Matrix(25, 4, 0.3), std::vector<std::size_t>(25, 0), 10, "flat"};
  const Model uniform = linear_model(Matrix(10, 4));
  const auto report = pls::winning_score_histogram(uniform, ds, 0.05, 0.1);
  for (double s : report.winning_scores) CHECK(s == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(report.histogram.counts.size() == 18);
  CHECK(report.histogram.counts[0] == 25);
  CHECK(report.histogram.total() == 25);

  // Very sharp logits: all mass in the top bin.
  Matrix head(3, 4);
  head(0, 0) = 1e4;
  const pls::Dataset sharp{Matrix(10, 4, 1.0), std::vector<std::size_t>(10, 0), 3, "sharp"};
  const auto top = pls::winning_score_histogram(linear_model(head), sharp, 0.05);
  CHECK(top.histogram.counts.back() == 10);

  // Hand tally.
  const std::vector<double> scores = {0.05, 0.12, 0.5, 0.55, 0.95, 1.0, 0.74};
  const auto h = pls::histogram(scores, 0.25);
  CHECK(h.counts == std::vector<std::size_t>{2, 0, 3, 2});
  const auto floor01 = pls::histogram(scores, 0.3, 0.1);
  CHECK(floor01.counts == std::vector<std::size_t>{1, 2, 3});
  CHECK(floor01.total() == 6);
  CHECK_THROWS_AS(pls::histogram(scores, 0.3), pls::ConfigError);

  const auto s = pls::summarize_scores(scores);
  CHECK(s.median == 0.55);
  CHECK(s.fraction_above_0_9 == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("winning scores lie in [1/K, 1] and histograms count every sample") {
  pls::Rng rng(7);
  const auto ds = blobs(7, 4);
  for (int trial = 0; trial < 10; ++trial) {
    Model model = Model::initialize({6, {8, 5}, 4, pls::SmoothingHeadMode::Distribution}, rng);
    const auto report = pls::evaluate(model, ds);
    for (double s : report.winning_scores) {
      CHECK(s >= 0.25 - 1e-12);
      CHECK(s <= 1.0);
    }
    CHECK(report.histogram.total() == ds.size());
    CHECK(report.calibration->ece >= 0.0);
    CHECK(report.calibration->ece <= 1.0);
  }
}

TEST_CASE("ood_report: reduction, noise bounds, dimension check") {
  pls::Rng rng(8);
  const auto ds = blobs(8);
  const Model model = Model::initialize({6, {8, 5}, 3, pls::SmoothingHeadMode::Distribution}, rng);
  const auto in = pls::evaluate(model, ds);
  const auto same = pls::ood_report(model, ds);
  CHECK(same.histogram.counts == in.histogram.counts);
  CHECK_FALSE(same.error_rate.has_value());

  const auto noise = pls::gen_uniform_noise(9, 200, 6, 3);
  const auto r = pls::ood_report(model, noise);
  CHECK(r.winning_scores.size() == 200);
  for (double s : r.winning_scores) {
    CHECK(s >= 1.0 / 3.0 - 1e-12);
    CHECK(s <= 1.0);
  }
  CHECK_THROWS_AS(pls::ood_report(model, pls::gen_uniform_noise(9, 5, 7, 3)), pls::ConfigError);
}

TEST_CASE("training signal: zero smoothing head, K=10, w=0.5 gives 0.3 ground-truth mass") {
  const auto ds = blobs(10, 10, 20);
  pls::Rng rng(10);
  Model model = Model::initialize({6, {8, 5}, 10, pls::SmoothingHeadMode::Distribution}, rng);
  for (double& v : model.smoothing_head().data()) v = 0.0;
  const auto stats = pls::training_signal_stats(model, ds, pls::TargetStrategy::pls(0.5), 1);
  CHECK(stats.pairs > 100);
  const double expected = 0.5 * 0.5 + 0.5 * 0.1;
  for (std::size_t k = 0; k < 10; ++k) {
    REQUIRE(stats.ground_truth_count[k] > 0);
    CHECK(std::abs(stats.ground_truth_mass[k] - expected) < 1e-12);
  }
  CHECK(stats.top_non_ground_truth.size() == 5);
  for (double t : stats.top_non_ground_truth) CHECK(std::abs(t - 0.05) < 1e-12);
  double total = 0.0;
  for (double m : stats.mean_target) {
    CHECK(m >= 0.0);
    total += m;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);

  CHECK_THROWS_AS(pls::training_signal_stats(model, ds, pls::TargetStrategy::baseline()), pls::ConfigError);
  CHECK_THROWS_AS(pls::training_signal_stats(model, ds, pls::TargetStrategy::mixup()), pls::ConfigError);
}

TEST_CASE("CSV writers") {
  const auto h = pls::histogram(std::vector<double>{0.1, 0.9}, 0.5);
  std::ostringstream os;
  const std::string prov[] = {"config_hash=x", "seed=1"};
  pls::write_histogram_csv(os, h, prov);
  CHECK(os.str() == "# config_hash=x\n# seed=1\nbin_lower,bin_upper,count\n0,0.5,1\n0.5,1,1\n");

  std::ostringstream es;
  pls::write_ece_csv(es, pls::ece(std::vector<double>{0.95}, {true}, 2));
  CHECK(es.str().rfind("lower,upper,count,confidence,accuracy\n", 0) == 0);
}
