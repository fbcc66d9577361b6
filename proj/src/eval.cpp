#include "pls/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "pls/errors.hpp"
#include "pls/rng.hpp"
#include "pls/train.hpp"

namespace pls {

using nlohmann::json;

namespace {

constexpr std::size_t kPredictChunk = 1024;

}  // namespace

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

EceResult ece(std::span<const double> confidences, const std::vector<bool>& correct, std::size_t num_bins) {
  if (confidences.size() != correct.size()) {
    throw ContractError("ece: " + std::to_string(confidences.size()) + " confidences vs " +
                        std::to_string(correct.size()) + " outcomes");
  }
  if (num_bins == 0) throw ConfigError("ece: num_bins must be positive");
  EceResult result;
  result.bins.resize(num_bins);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<double> hits(num_bins, 0.0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw ContractError("ece: confidence outside [0,1]");
    const auto bin = std::min(static_cast<std::size_t>(std::floor(c * static_cast<double>(num_bins))), num_bins - 1);
    ++result.bins[bin].count;
    conf_sum[bin] += c;
    hits[bin] += correct[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(confidences.size());
  for (std::size_t b = 0; b < num_bins; ++b) {
    auto& bin = result.bins[b];
    bin.lower = static_cast<double>(b) / static_cast<double>(num_bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(num_bins);
    if (bin.count == 0) continue;
    const double count = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / count;
    bin.accuracy = hits[b] / count;
    result.ece += count / n * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return result;
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

Histogram histogram(std::span<const double> scores, double bin_width, double min_score) {
  if (!(bin_width > 0.0) || !(min_score >= 0.0 && min_score < 1.0)) {
    throw ConfigError("histogram: need bin_width > 0 and min_score in [0,1)");
  }
  const double span = 1.0 - min_score;
  const double bins_exact = span / bin_width;
  const auto bins = static_cast<std::size_t>(std::llround(bins_exact));
  if (bins == 0 || std::abs(bins_exact - static_cast<double>(bins)) > 1e-9) {
    throw ConfigError("histogram: bin_width must divide [min_score, 1] evenly");
  }
  Histogram h;
  h.min_score = min_score;
  h.bin_width = bin_width;
  h.counts.assign(bins, 0);
  for (double s : scores) {
    if (s < min_score) continue;
    const double pos = (s - min_score) * static_cast<double>(bins) / span;
    const auto bin = std::min(static_cast<std::size_t>(std::floor(pos)), bins - 1);
    ++h.counts[bin];
  }
  return h;
}

ScoreSummary summarize_scores(std::span<const double> scores) {
  ScoreSummary s;
  s.count = scores.size();
  if (scores.empty()) return s;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::size_t above = 0;
  double total = 0.0;
  for (double v : sorted) {
    if (v > 0.9) ++above;
    total += v;
  }
  s.fraction_above_0_9 = static_cast<double>(above) / static_cast<double>(n);
  s.mean = total / static_cast<double>(n);
  return s;
}

Predictions predict(const Model& model, const Matrix& inputs, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("predict: temperature must be positive");
  if (inputs.cols() != model.input_dim()) {
    throw DimensionError("predict: inputs " + inputs.shape_string() + " but model expects width " +
                         std::to_string(model.input_dim()));
  }
  const std::size_t n = inputs.rows();
  const std::size_t k = model.num_classes();
  Predictions out;
  out.probs = Matrix(n, k);
  out.logits = Matrix(n, k);
  out.predicted.reserve(n);
  out.winning_scores.reserve(n);
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < n; begin += kPredictChunk) {
    const std::size_t end = std::min(n, begin + kPredictChunk);
    idx.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    const ForwardTrace trace = forward(model, gather_rows(inputs, idx));
    const Matrix probs = temperature == 1.0 ? trace.probs : softmax_rows(scale(trace.logits, temperature));
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      std::copy_n(probs.row(r).begin(), k, out.probs.row(begin + r).begin());
      std::copy_n(trace.logits.row(r).begin(), k, out.logits.row(begin + r).begin());
      const std::size_t best = argmax_row(probs.row(r));
      out.predicted.push_back(best);
      out.winning_scores.push_back(probs(r, best));
    }
  }
  return out;
}

double error_rate(const Matrix& scores, std::span<const std::size_t> labels) {
  if (scores.rows() == 0) throw ContractError("error_rate: empty dataset");
  if (scores.rows() != labels.size()) throw DimensionError("error_rate: row/label count mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (argmax_row(scores.row(i)) != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(scores.rows());
}

double error_rate(const Model& model, const Dataset& dataset) {
  if (dataset.size() == 0) throw ContractError("error_rate: empty dataset");
  return error_rate(predict(model, dataset.inputs).probs, dataset.labels);
}

std::vector<double> default_temperature_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 40; ++k) grid.push_back(static_cast<double>(k) / 20.0);
  return grid;
}

namespace {

EceResult ece_of(const Matrix& probs, std::span<const std::size_t> labels, std::size_t num_bins) {
  std::vector<double> conf(probs.rows());
  std::vector<bool> correct(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const std::size_t best = argmax_row(probs.row(i));
    conf[i] = probs(i, best);
    correct[i] = best == labels[i];
  }
  return ece(conf, correct, num_bins);
}

}  // namespace

TemperatureSearch temperature_search(const Model& model, const Dataset& calibration, std::span<const double> grid,
                                     std::size_t num_bins) {
  if (grid.empty()) throw ConfigError("temperature_search: empty grid");
  if (calibration.size() == 0) throw ContractError("temperature_search: empty calibration split");
  for (double t : grid) {
    if (!(t > 0.0)) throw ConfigError("temperature_search: grid values must be positive");
  }
  const Matrix logits = predict(model, calibration.inputs).logits;
  TemperatureSearch result;
  result.grid.assign(grid.begin(), grid.end());
  result.ece_at_one = ece_of(softmax_rows(logits), calibration.labels, num_bins).ece;
  double best_t = 0.0;
  double best_ece = 0.0;
  for (double t : grid) {
    const double e = ece_of(softmax_rows(scale(logits, t)), calibration.labels, num_bins).ece;
    result.grid_ece.push_back(e);
    if (best_t == 0.0 || e < best_ece || (e == best_ece && t < best_t)) {
      best_t = t;
      best_ece = e;
    }
  }
  result.temperature = best_t;
  result.ece_at_best = best_ece;
  return result;
}

json EvalReport::summary_json() const {
  json j;
  j["count"] = summary.count;
  j["median_winning_score"] = summary.median;
  j["mean_winning_score"] = summary.mean;
  j["fraction_above_0_9"] = summary.fraction_above_0_9;
  if (error_rate) j["error_rate"] = *error_rate;
  if (calibration) j["ece"] = calibration->ece;
  if (temperature) j["temperature"] = *temperature;
  j["histogram"] = {{"min_score", histogram.min_score},
                    {"bin_width", histogram.bin_width},
                    {"counts", histogram.counts}};
  return j;
}

EvalReport evaluate(const Model& model, const Dataset& dataset, const EvalOptions& options) {
  if (dataset.size() == 0) throw ContractError("evaluate: empty dataset");
  const Predictions pred = predict(model, dataset.inputs, options.temperature);
  EvalReport report;
  report.error_rate = error_rate(pred.probs, dataset.labels);
  report.calibration = ece_of(pred.probs, dataset.labels, options.ece_bins);
  if (options.temperature != 1.0) report.temperature = options.temperature;
  report.winning_scores = pred.winning_scores;
  report.histogram = histogram(pred.winning_scores, options.hist_bin_width, options.min_score);
  report.summary = summarize_scores(pred.winning_scores);
  return report;
}

EvalReport winning_score_histogram(const Model& model, const Dataset& dataset, double bin_width, double min_score) {
  const Predictions pred = predict(model, dataset.inputs);
  EvalReport report;
  report.winning_scores = pred.winning_scores;
  report.histogram = histogram(pred.winning_scores, bin_width, min_score);
  report.summary = summarize_scores(pred.winning_scores);
  return report;
}

EvalReport ood_report(const Model& model, const Dataset& other, const EvalOptions& options) {
  if (other.dim() != model.input_dim()) {
    throw ConfigError("ood_report: dataset dimension " + std::to_string(other.dim()) +
                      " does not match model input width " + std::to_string(model.input_dim()));
  }
  const Predictions pred = predict(model, other.inputs, options.temperature);
  EvalReport report;
  if (options.temperature != 1.0) report.temperature = options.temperature;
  report.winning_scores = pred.winning_scores;
  report.histogram = histogram(pred.winning_scores, options.hist_bin_width, options.min_score);
  report.summary = summarize_scores(pred.winning_scores);
  return report;
}

TrainingSignalStats training_signal_stats(const Model& model, const Dataset& dataset, const TargetStrategy& strategy,
                                          std::uint64_t seed) {
  if (!strategy.is_pls()) throw ConfigError("training_signal_stats: strategy must be a PLS variant");
  if (strategy.head_mode() != model.head_mode()) {
    throw ConfigError("training_signal_stats: model head does not match strategy " + strategy.label());
  }
  if (dataset.dim() != model.input_dim() || dataset.num_classes != model.num_classes()) {
    throw ConfigError("training_signal_stats: dataset does not match model");
  }
  const std::size_t k = dataset.num_classes;
  Rng rng(seed, "signal-pairs");
  const auto perm = rng.permutation(dataset.size());
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (dataset.labels[i] != dataset.labels[perm[i]]) {
      first.push_back(i);
      second.push_back(perm[i]);
    }
  }

  TrainingSignalStats stats;
  stats.pairs = first.size();
  stats.ground_truth_mass.assign(k, 0.0);
  stats.ground_truth_count.assign(k, 0);
  const std::size_t top = std::min<std::size_t>(5, k - 2);
  stats.top_non_ground_truth.assign(top, 0.0);
  stats.mean_target.assign(k, 0.0);
  if (stats.pairs == 0) return stats;

  std::vector<double> rest;
  for (std::size_t begin = 0; begin < stats.pairs; begin += kPredictChunk) {
    const std::size_t end = std::min(stats.pairs, begin + kPredictChunk);
    Batch chunk;
    std::vector<std::size_t> idx;
    std::vector<std::size_t> perm_local;
    for (std::size_t p = begin; p < end; ++p) idx.push_back(first[p]);
    for (std::size_t p = begin; p < end; ++p) idx.push_back(second[p]);
    chunk.inputs = gather_rows(dataset.inputs, idx);
    for (std::size_t i : idx) chunk.labels.push_back(dataset.labels[i]);
    chunk.onehot = one_hot(chunk.labels, k);
    // Row r pairs with row r + n, so the midpoint rows come first.
    const std::size_t n = end - begin;
    for (std::size_t r = 0; r < n; ++r) perm_local.push_back(r + n);
    for (std::size_t r = 0; r < n; ++r) perm_local.push_back(r);
    const PairedBatch paired = midpoint(chunk, perm_local);
    std::vector<std::size_t> head(n);
    for (std::size_t r = 0; r < n; ++r) head[r] = r;
    const Matrix inputs = gather_rows(paired.inputs, head);
    const Matrix q = gather_rows(paired.q, head);

    const ForwardTrace trace = forward(model, inputs);
    const StepTargets targets = build_step_targets(strategy, q);
    const Matrix realized = realized_targets(targets, trace, model.head_mode());
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t a = chunk.labels[r];
      const std::size_t b = chunk.labels[r + n];
      stats.ground_truth_mass[a] += realized(r, a);
      stats.ground_truth_mass[b] += realized(r, b);
      ++stats.ground_truth_count[a];
      ++stats.ground_truth_count[b];
      rest.clear();
      for (std::size_t c = 0; c < k; ++c) {
        stats.mean_target[c] += realized(r, c);
        if (c != a && c != b) rest.push_back(realized(r, c));
      }
      std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(top), rest.end(),
                        std::greater<>());
      for (std::size_t t = 0; t < top; ++t) stats.top_non_ground_truth[t] += rest[t];
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (stats.ground_truth_count[c] > 0) {
      stats.ground_truth_mass[c] /= static_cast<double>(stats.ground_truth_count[c]);
    }
    stats.mean_target[c] /= static_cast<double>(stats.pairs);
  }
  for (double& t : stats.top_non_ground_truth) t /= static_cast<double>(stats.pairs);
  return stats;
}

void write_histogram_csv(std::ostream& out, const Histogram& h, std::span<const std::string> provenance) {
  for (const auto& line : provenance) out << "# " << line << '\n';
  out << "bin_lower,bin_upper,count\n" << std::setprecision(17);
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << h.lower(b) << ',' << h.upper(b) << ',' << h.counts[b] << '\n';
  }
}

void write_ece_csv(std::ostream& out, const EceResult& e, std::span<const std::string> provenance) {
  for (const auto& line : provenance) out << "# " << line << '\n';
  out << "lower,upper,count,confidence,accuracy\n" << std::setprecision(17);
  for (const auto& b : e.bins) {
    out << b.lower << ',' << b.upper << ',' << b.count << ',' << b.mean_confidence << ',' << b.accuracy << '\n';
  }
}

}  // namespace pls
