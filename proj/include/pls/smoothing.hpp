#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pls/data.hpp"
#include "pls/nn.hpp"
#include "pls/tensor.hpp"

namespace pls {

enum class StrategyKind {
  Baseline,      // one-hot targets
  ULS,           // uniform label smoothing with alpha
  Mixup,         // pairwise interpolation; lambda ~ U[0,1] per batch unless fixed
  MixupULS,      // Mixup, then uniform smoothing of the mixed labels
  PLS,           // midpoints + learned smoothing distribution mixed in with weight w
  PLS_UD,        // midpoints + uniform distribution with weight alpha in place of the learned one
  PLS_Coeff,     // midpoints + learned scalar coefficient toward uniform
  PLS_NoLearned  // midpoints only; the learned term is dropped
};

struct TargetStrategy {
  StrategyKind kind = StrategyKind::Baseline;
  double alpha = 0.0;
  double w = 0.5;
  std::optional<double> mixup_lambda;  // fixed mixing coefficient for Mixup/MixupULS

  static TargetStrategy baseline() { return {}; }
  static TargetStrategy uls(double alpha) { return {StrategyKind::ULS, alpha, 0.5, std::nullopt}; }
  static TargetStrategy mixup(std::optional<double> lambda = std::nullopt) {
    return {StrategyKind::Mixup, 0.0, 0.5, lambda};
  }
  static TargetStrategy mixup_uls(double alpha) { return {StrategyKind::MixupULS, alpha, 0.5, std::nullopt}; }
  static TargetStrategy pls(double w = 0.5) { return {StrategyKind::PLS, 0.0, w, std::nullopt}; }
  static TargetStrategy pls_ud(double alpha, double w = 0.5) { return {StrategyKind::PLS_UD, alpha, w, std::nullopt}; }
  static TargetStrategy pls_coeff(double w = 0.5) { return {StrategyKind::PLS_Coeff, 0.0, w, std::nullopt}; }
  static TargetStrategy pls_no_learned(double w = 0.5) { return {StrategyKind::PLS_NoLearned, 0.0, w, std::nullopt}; }

  bool is_pls() const;
  bool is_mixup() const { return kind == StrategyKind::Mixup || kind == StrategyKind::MixupULS; }
  bool uses_pairs() const { return is_pls() || is_mixup(); }
  // Whether the smoothing head contributes to the loss.
  bool learned_smoothing() const { return kind == StrategyKind::PLS || kind == StrategyKind::PLS_Coeff; }
  SmoothingHeadMode head_mode() const;

  // Throws ConfigError when alpha, w, or lambda fall outside [0,1].
  void validate() const;
  // Short display label, e.g. "ULS(0.1)", "PLS(0.5)", "Mixup".
  std::string label() const;

  friend bool operator==(const TargetStrategy&, const TargetStrategy&) = default;
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

// {"kind": "...", "alpha": ..., "w": ..., "lambda": ...}; unknown keys are rejected.
nlohmann::json strategy_to_json(const TargetStrategy& s);
TargetStrategy strategy_from_json(const nlohmann::json& j);
// Parses labels such as "Baseline", "ULS(0.1)", "PLS", "PLS(0.3)", "PLS_UD(0.2)", "Mixup(0.5)".
TargetStrategy parse_strategy_label(const std::string& label);

// Pairwise-mixed batch: inputs, mixed labels, and the partner index of every row.
struct PairedBatch {
  Matrix inputs;
  Matrix q;
  std::vector<std::size_t> perm;
};

// x = (x_i + x_perm(i)) / 2, q = (y_i + y_perm(i)) / 2.
PairedBatch midpoint(const Batch& batch, std::span<const std::size_t> perm);

// x = lambda x_i + (1 - lambda) x_perm(i), same for the labels.
PairedBatch mixup(const Batch& batch, std::span<const std::size_t> perm, double lambda);

// (1 - alpha) q + alpha / K for every row; q may be any distribution.
Matrix smooth_toward_uniform(const Matrix& q, double alpha);

// Uniform label smoothing of exact one-hot rows.
Matrix uls_target(const Matrix& onehot, double alpha);

// (1 - w) q + w u'. Rows of both inputs must sum to 1.
Matrix pls_target(const Matrix& q, const Matrix& u_prime, double w);

// Uniform-distribution ablation: (1 - alpha) q + alpha / K. w is accepted for
// signature symmetry with the learned variants and does not enter the formula.
Matrix ud_smoothing(const Matrix& q, double alpha, double w);

// Coefficient ablation: (1 - w) q + w [(1 - s_b) q + s_b / K], s is B x 1 in [0,1].
Matrix coeff_smoothing(const Matrix& q, const Matrix& s, double w);

}  // namespace pls
