#include "pls/smoothing.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include "pls/errors.hpp"

namespace pls {

using nlohmann::json;

namespace {

constexpr double kRowSumTolerance = 1e-6;

void require_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0,1], got " + std::to_string(v));
  }
}

void require_distribution_rows(const Matrix& m, const char* what) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double total = 0.0;
    for (double v : m.row(i)) {
      if (v < 0.0) throw TargetDistributionError(std::string(what) + ": negative entry in row " + std::to_string(i));
      total += v;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw TargetDistributionError(std::string(what) + ": row " + std::to_string(i) + " sums to " +
                                    std::to_string(total));
    }
  }
}

void require_perm(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) throw ContractError("pairing: permutation length does not match batch");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw ContractError("pairing: not a permutation of batch indices");
    seen[p] = true;
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

bool TargetStrategy::is_pls() const {
  switch (kind) {
    case StrategyKind::PLS:
    case StrategyKind::PLS_UD:
    case StrategyKind::PLS_Coeff:
    case StrategyKind::PLS_NoLearned:
      return true;
    default:
      return false;
  }
}

SmoothingHeadMode TargetStrategy::head_mode() const {
  return kind == StrategyKind::PLS_Coeff ? SmoothingHeadMode::Coefficient : SmoothingHeadMode::Distribution;
}

void TargetStrategy::validate() const {
  require_unit_interval(alpha, "strategy alpha");
  require_unit_interval(w, "strategy w");
  if (mixup_lambda) require_unit_interval(*mixup_lambda, "strategy lambda");
}

std::string TargetStrategy::label() const {
  switch (kind) {
    case StrategyKind::Baseline:
      return "Baseline";
    case StrategyKind::ULS:
      return "ULS(" + format_number(alpha) + ")";
    case StrategyKind::Mixup:
      return mixup_lambda ? "Mixup(" + format_number(*mixup_lambda) + ")" : "Mixup";
    case StrategyKind::MixupULS:
      return "MixupULS(" + format_number(alpha) + ")";
    case StrategyKind::PLS:
      return "PLS(" + format_number(w) + ")";
    case StrategyKind::PLS_UD:
      return "PLS_UD(" + format_number(alpha) + ")";
    case StrategyKind::PLS_Coeff:
      return "PLS_Coeff(" + format_number(w) + ")";
    case StrategyKind::PLS_NoLearned:
      return "PLS_NoLearned";
  }
  return "?";
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Baseline: return "Baseline";
    case StrategyKind::ULS: return "ULS";
    case StrategyKind::Mixup: return "Mixup";
    case StrategyKind::MixupULS: return "MixupULS";
    case StrategyKind::PLS: return "PLS";
    case StrategyKind::PLS_UD: return "PLS_UD";
    case StrategyKind::PLS_Coeff: return "PLS_Coeff";
    case StrategyKind::PLS_NoLearned: return "PLS_NoLearned";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  for (auto k : {StrategyKind::Baseline, StrategyKind::ULS, StrategyKind::Mixup, StrategyKind::MixupULS,
                 StrategyKind::PLS, StrategyKind::PLS_UD, StrategyKind::PLS_Coeff, StrategyKind::PLS_NoLearned}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown strategy kind '" + s + "'");
}

json strategy_to_json(const TargetStrategy& s) {
  json j{{"kind", to_string(s.kind)}, {"alpha", s.alpha}, {"w", s.w}};
  if (s.mixup_lambda) j["lambda"] = *s.mixup_lambda;
  return j;
}

TargetStrategy strategy_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("strategy: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "alpha" && key != "w" && key != "lambda") {
      throw ConfigError("strategy: unknown key '" + key + "'");
    }
    if (key != "kind" && !value.is_number()) throw ConfigError("strategy: '" + key + "' must be a number");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("strategy: missing string 'kind'");
  TargetStrategy s;
  s.kind = strategy_kind_from_string(j["kind"].get<std::string>());
  s.alpha = j.value("alpha", 0.0);
  s.w = j.value("w", 0.5);
  if (j.contains("lambda")) s.mixup_lambda = j["lambda"].get<double>();
  s.validate();
  return s;
}

TargetStrategy parse_strategy_label(const std::string& label) {
  static const std::regex pattern(R"(^\s*([A-Za-z_]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(label, m, pattern)) throw ConfigError("cannot parse strategy '" + label + "'");
  TargetStrategy s;
  s.kind = strategy_kind_from_string(m[1].str());
  if (m[2].matched) {
    double v = 0.0;
    try {
      v = std::stod(m[2].str());
    } catch (const std::exception&) {
      throw ConfigError("cannot parse strategy parameter in '" + label + "'");
    }
    switch (s.kind) {
      case StrategyKind::ULS:
      case StrategyKind::MixupULS:
      case StrategyKind::PLS_UD:
        s.alpha = v;
        break;
      case StrategyKind::Mixup:
        s.mixup_lambda = v;
        break;
      case StrategyKind::PLS:
      case StrategyKind::PLS_Coeff:
      case StrategyKind::PLS_NoLearned:
        s.w = v;
        break;
      case StrategyKind::Baseline:
        throw ConfigError("Baseline takes no parameter");
    }
  }
  s.validate();
  return s;
}

PairedBatch midpoint(const Batch& batch, std::span<const std::size_t> perm) {
  require_perm(perm, batch.inputs.rows());
  PairedBatch out;
  out.perm.assign(perm.begin(), perm.end());
  out.inputs = Matrix(batch.inputs.rows(), batch.inputs.cols());
  out.q = Matrix(batch.onehot.rows(), batch.onehot.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const std::size_t j = perm[i];
    for (std::size_t d = 0; d < batch.inputs.cols(); ++d) {
      out.inputs(i, d) = (batch.inputs(i, d) + batch.inputs(j, d)) / 2.0;
    }
    for (std::size_t k = 0; k < batch.onehot.cols(); ++k) {
      out.q(i, k) = (batch.onehot(i, k) + batch.onehot(j, k)) / 2.0;
    }
  }
  return out;
}

PairedBatch mixup(const Batch& batch, std::span<const std::size_t> perm, double lambda) {
  require_unit_interval(lambda, "mixup lambda");
  require_perm(perm, batch.inputs.rows());
  const double other = 1.0 - lambda;
  PairedBatch out;
  out.perm.assign(perm.begin(), perm.end());
  out.inputs = Matrix(batch.inputs.rows(), batch.inputs.cols());
  out.q = Matrix(batch.onehot.rows(), batch.onehot.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const std::size_t j = perm[i];
    for (std::size_t d = 0; d < batch.inputs.cols(); ++d) {
      out.inputs(i, d) = lambda * batch.inputs(i, d) + other * batch.inputs(j, d);
    }
    for (std::size_t k = 0; k < batch.onehot.cols(); ++k) {
      out.q(i, k) = lambda * batch.onehot(i, k) + other * batch.onehot(j, k);
    }
  }
  return out;
}

Matrix smooth_toward_uniform(const Matrix& q, double alpha) {
  require_unit_interval(alpha, "smoothing alpha");
  const double uniform = alpha / static_cast<double>(q.cols());
  Matrix out(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t k = 0; k < q.cols(); ++k) out(i, k) = (1.0 - alpha) * q(i, k) + uniform;
  return out;
}

Matrix uls_target(const Matrix& onehot, double alpha) {
  require_unit_interval(alpha, "ULS alpha");
  for (std::size_t i = 0; i < onehot.rows(); ++i) {
    std::size_t ones = 0;
    for (double v : onehot.row(i)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = 2;
        break;
      }
    }
    if (ones != 1) throw TargetDistributionError("uls_target: row " + std::to_string(i) + " is not one-hot");
  }
  return smooth_toward_uniform(onehot, alpha);
}

Matrix pls_target(const Matrix& q, const Matrix& u_prime, double w) {
  require_unit_interval(w, "PLS w");
  if (q.rows() != u_prime.rows() || q.cols() != u_prime.cols()) {
    throw DimensionError("pls_target: q " + q.shape_string() + " vs u' " + u_prime.shape_string());
  }
  require_distribution_rows(q, "pls_target q");
  require_distribution_rows(u_prime, "pls_target u'");
  Matrix out(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t k = 0; k < q.cols(); ++k) out(i, k) = (1.0 - w) * q(i, k) + w * u_prime(i, k);
  return out;
}

Matrix ud_smoothing(const Matrix& q, double alpha, double w) {
  require_unit_interval(w, "PLS w");
  require_distribution_rows(q, "ud_smoothing q");
  return smooth_toward_uniform(q, alpha);
}

Matrix coeff_smoothing(const Matrix& q, const Matrix& s, double w) {
  require_unit_interval(w, "PLS w");
  if (s.rows() != q.rows() || s.cols() != 1) {
    throw DimensionError("coeff_smoothing: s " + s.shape_string() + " for q " + q.shape_string());
  }
  require_distribution_rows(q, "coeff_smoothing q");
  const double uniform = 1.0 / static_cast<double>(q.cols());
  Matrix out(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const double sb = s(i, 0);
    if (!(sb >= 0.0 && sb <= 1.0)) {
      throw ContractError("coeff_smoothing: coefficient " + std::to_string(sb) + " outside [0,1]");
    }
    for (std::size_t k = 0; k < q.cols(); ++k) {
      out(i, k) = (1.0 - w) * q(i, k) + w * ((1.0 - sb) * q(i, k) + sb * uniform);
    }
  }
  return out;
}

}  // namespace pls
