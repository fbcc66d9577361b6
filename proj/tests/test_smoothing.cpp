#include <doctest.h>

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "oracle.hpp"
#include "pls/data.hpp"
#include "pls/errors.hpp"
#include "pls/smoothing.hpp"

using pls::Matrix;
using pls::TargetStrategy;

namespace {

pls::Batch make_batch(Matrix inputs, std::vector<std::size_t> labels, std::size_t k) {
  pls::Batch b;
  b.onehot = pls::one_hot(labels, k);
  b.inputs = std::move(inputs);
  b.labels = std::move(labels);
  return b;
}

void check_row(const Matrix& m, std::size_t row, std::initializer_list<double> expected, double tol = 1e-15) {
  std::size_t k = 0;
  for (double e : expected) CHECK(std::abs(m(row, k++) - e) <= tol);
}

}  // namespace

TEST_CASE("midpoint examples") {
  const auto batch = make_batch(Matrix{{0, 2}, {4, 0}}, {0, 2}, 3);
  const std::size_t perm[] = {1, 0};
  const auto mid = pls::midpoint(batch, perm);
  check_row(mid.inputs, 0, {2, 1});
  check_row(mid.q, 0, {0.5, 0, 0.5});

  const std::size_t ident[] = {0, 1};
  const auto same = pls::midpoint(batch, ident);
  CHECK(same.inputs == batch.inputs);
  CHECK(same.q == batch.onehot);

  const auto equal_labels = make_batch(Matrix{{1, 1}, {3, 5}}, {1, 1}, 3);
  CHECK(pls::midpoint(equal_labels, perm).q == equal_labels.onehot);

  const std::size_t bad[] = {0, 0};
  CHECK_THROWS_AS(pls::midpoint(batch, bad), pls::ContractError);
  const std::size_t short_perm[] = {0};
  CHECK_THROWS(pls::midpoint(batch, short_perm));
}

TEST_CASE("mixup examples") {
  pls::Rng rng(1);
  const auto batch = make_batch(oracle::random_matrix(6, 4, rng), {0, 1, 2, 0, 1, 2}, 3);
  const auto perm = rng.permutation(6);
  const auto a = pls::mixup(batch, perm, 0.5);
  const auto b = pls::midpoint(batch, perm);
  CHECK(a.inputs == b.inputs);
  CHECK(a.q == b.q);

  const auto one = pls::mixup(batch, perm, 1.0);
  CHECK(one.inputs == batch.inputs);
  CHECK(one.q == batch.onehot);

  const auto two = make_batch(Matrix{{1.0}, {0.0}}, {0, 1}, 2);
  const std::size_t swap[] = {1, 0};
  check_row(pls::mixup(two, swap, 0.3).q, 0, {0.3, 0.7});
}

TEST_CASE("uls_target examples") {
  const Matrix onehot{{0, 1, 0, 0}};
  check_row(pls::uls_target(onehot, 0.2), 0, {0.05, 0.85, 0.05, 0.05}, 1e-15);
  CHECK(pls::uls_target(onehot, 0.0) == onehot);
  check_row(pls::uls_target(onehot, 1.0), 0, {0.25, 0.25, 0.25, 0.25});
  CHECK_THROWS_AS(pls::uls_target(onehot, 1.5), pls::ConfigError);
  CHECK_THROWS_AS(pls::uls_target(onehot, -0.1), pls::ConfigError);
}

TEST_CASE("pls_target examples") {
  const Matrix q{{0.5, 0, 0.5, 0}};
  const Matrix u{{0.25, 0.25, 0.25, 0.25}};
  check_row(pls::pls_target(q, u, 0.5), 0, {0.375, 0.125, 0.375, 0.125});
  CHECK(pls::pls_target(q, u, 0.0) == q);
  CHECK_THROWS_AS(pls::pls_target(Matrix{{0.5, 0, 0.4, 0}}, u, 0.5), pls::TargetDistributionError);
  CHECK_THROWS_AS(pls::pls_target(q, Matrix{{0.3, 0.3, 0.3, 0.3}}, 0.5), pls::TargetDistributionError);
}

TEST_CASE("ud_smoothing examples") {
  const Matrix q{{0.5, 0.5, 0, 0}};
  check_row(pls::ud_smoothing(q, 0.2, 0.5), 0, {0.45, 0.45, 0.05, 0.05}, 1e-15);
  CHECK(pls::ud_smoothing(q, 0.0, 0.5) == q);
  CHECK_THROWS_AS(pls::ud_smoothing(q, 2.0, 0.5), pls::ConfigError);
}

TEST_CASE("coeff_smoothing examples") {
  const Matrix q{{1.0, 0.0}};
  // (1 - w) q + w [(1 - s) q + s / K] with s = 0.5, w = 0.5, K = 2.
  const double w = 0.5;
  const double s = 0.5;
  const double first = (1 - w) * 1.0 + w * ((1 - s) * 1.0 + s / 2.0);
  const double second = (1 - w) * 0.0 + w * ((1 - s) * 0.0 + s / 2.0);
  check_row(pls::coeff_smoothing(q, Matrix{{s}}, w), 0, {first, second});
  check_row(pls::coeff_smoothing(q, Matrix{{s}}, w), 0, {0.875, 0.125});

  const Matrix q4{{0.5, 0.5, 0, 0}};
  CHECK(pls::coeff_smoothing(q4, Matrix{{1.0}}, 0.3) == pls::ud_smoothing(q4, 0.3, 0.3));
  CHECK(pls::coeff_smoothing(q4, Matrix{{0.0}}, 0.3) == q4);
  CHECK_THROWS_AS(pls::coeff_smoothing(q4, Matrix{{1.2}}, 0.3), pls::ContractError);
  CHECK_THROWS_AS(pls::coeff_smoothing(q4, Matrix{{-0.1}}, 0.3), pls::ContractError);
}

TEST_CASE("smoothing outputs are distributions on random inputs") {
  pls::Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform() * 9);
    Matrix q(3, k);
    Matrix u(3, k);
    Matrix s(3, 1);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto a = oracle::random_distribution(k, rng);
      const auto b = oracle::random_distribution(k, rng);
      for (std::size_t c = 0; c < k; ++c) {
        q(i, c) = a[c];
        u(i, c) = b[c];
      }
      s(i, 0) = rng.uniform();
    }
    const double w = rng.uniform();
    for (const Matrix& out : {pls::pls_target(q, u, w), pls::ud_smoothing(q, w, 0.5), pls::coeff_smoothing(q, s, w),
                              pls::smooth_toward_uniform(q, w)}) {
      for (std::size_t i = 0; i < 3; ++i) {
        double total = 0.0;
        for (double v : out.row(i)) {
          CHECK(v >= 0.0);
          total += v;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("strategy labels, predicates and JSON") {
  CHECK(TargetStrategy::uls(0.1).label() == "ULS(0.1)");
  CHECK(TargetStrategy::pls(0.5).label() == "PLS(0.5)");
  CHECK(TargetStrategy::baseline().label() == "Baseline");
  CHECK(pls::parse_strategy_label("PLS(0.3)") == TargetStrategy::pls(0.3));
  CHECK(pls::parse_strategy_label("PLS") == TargetStrategy::pls());
  CHECK(pls::parse_strategy_label("ULS(0.2)") == TargetStrategy::uls(0.2));
  CHECK(pls::parse_strategy_label("Mixup(0.5)") == TargetStrategy::mixup(0.5));
  CHECK(pls::parse_strategy_label("Mixup") == TargetStrategy::mixup());
  CHECK(pls::parse_strategy_label("PLS_UD(0.2)").alpha == 0.2);
  CHECK(pls::parse_strategy_label("PLS_Coeff").head_mode() == pls::SmoothingHeadMode::Coefficient);
  CHECK_THROWS_AS(pls::parse_strategy_label("Dropout(0.1)"), pls::ConfigError);
  CHECK_THROWS_AS(pls::parse_strategy_label("ULS(abc)"), pls::ConfigError);
  CHECK_THROWS_AS(pls::parse_strategy_label("ULS(1.5)"), pls::ConfigError);

  CHECK(TargetStrategy::pls().is_pls());
  CHECK(TargetStrategy::pls_no_learned().uses_pairs());
  CHECK_FALSE(TargetStrategy::pls_no_learned().learned_smoothing());
  CHECK(TargetStrategy::mixup_uls(0.1).is_mixup());
  CHECK_FALSE(TargetStrategy::uls(0.1).uses_pairs());

  for (const auto& s : {TargetStrategy::baseline(), TargetStrategy::uls(0.1), TargetStrategy::mixup(0.4),
                        TargetStrategy::mixup_uls(0.2), TargetStrategy::pls(0.7), TargetStrategy::pls_ud(0.2, 0.3),
                        TargetStrategy::pls_coeff(0.5), TargetStrategy::pls_no_learned()}) {
    CHECK(pls::strategy_from_json(pls::strategy_to_json(s)) == s);
  }
  CHECK_THROWS_AS(pls::strategy_from_json(nlohmann::json{{"kind", "PLS"}, {"beta", 1}}), pls::ConfigError);
  CHECK_THROWS_AS(pls::strategy_from_json(nlohmann::json{{"kind", "PLS"}, {"w", 2}}), pls::ConfigError);
}
