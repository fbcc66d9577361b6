#include "pls/nn.hpp"

#include <algorithm>
#include <cmath>

#include "pls/errors.hpp"

namespace pls {

namespace {

constexpr double kTargetSumTolerance = 1e-6;

Matrix uniform_init(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

// log softmax of each row of z.
Matrix log_softmax_rows(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto in = z.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - mx);
    const double lse = mx + std::log(total);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < in.size(); ++j) dst[j] = in[j] - lse;
  }
  return out;
}

void check_targets(const Matrix& q, const ForwardTrace& trace, double w) {
  if (q.rows() != trace.probs.rows() || q.cols() != trace.probs.cols()) {
    throw DimensionError("loss: targets " + q.shape_string() + " vs predictions " +
                         trace.probs.shape_string());
  }
  if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("loss: mixing weight w must lie in [0,1]");
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double total = 0.0;
    for (double v : q.row(i)) {
      if (v < 0.0) throw TargetDistributionError("loss: negative target in row " + std::to_string(i));
      total += v;
    }
    if (std::abs(total - 1.0) > kTargetSumTolerance) {
      throw TargetDistributionError("loss: target row " + std::to_string(i) + " sums to " +
                                    std::to_string(total));
    }
  }
}

double mixed_cross_entropy(const Matrix& q, const Matrix& r, const Matrix& log_p, double w) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double hq = 0.0;
    double hr = 0.0;
    for (std::size_t k = 0; k < q.cols(); ++k) {
      hq -= q(i, k) * log_p(i, k);
      hr -= r(i, k) * log_p(i, k);
    }
    total += (1.0 - w) * hq + w * hr;
  }
  return total / static_cast<double>(q.rows());
}

}  // namespace

std::string to_string(SmoothingHeadMode mode) {
  return mode == SmoothingHeadMode::Distribution ? "distribution" : "coefficient";
}

SmoothingHeadMode head_mode_from_string(const std::string& s) {
  if (s == "distribution") return SmoothingHeadMode::Distribution;
  if (s == "coefficient") return SmoothingHeadMode::Coefficient;
  throw ConfigError("unknown smoothing head mode '" + s + "'");
}

Model::Model(std::vector<DenseLayer> trunk, Matrix logit_head, Matrix smoothing_head,
             SmoothingHeadMode head_mode)
    : trunk_(std::move(trunk)),
      logit_head_(std::move(logit_head)),
      smoothing_head_(std::move(smoothing_head)),
      head_mode_(head_mode) {
  validate();
}

void Model::validate() const {
  if (trunk_.empty()) throw DimensionError("Model: trunk needs at least one layer");
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    const auto& layer = trunk_[l];
    if (layer.weight.empty() || layer.bias.rows() != layer.weight.rows() || layer.bias.cols() != 1) {
      throw DimensionError("Model: trunk layer " + std::to_string(l) + " weight " +
                           layer.weight.shape_string() + " bias " + layer.bias.shape_string());
    }
    if (l > 0 && layer.weight.cols() != trunk_[l - 1].weight.rows()) {
      throw DimensionError("Model: trunk layer " + std::to_string(l) + " expects width " +
                           std::to_string(layer.weight.cols()) + " but previous layer emits " +
                           std::to_string(trunk_[l - 1].weight.rows()));
    }
  }
  const std::size_t m = trunk_.back().weight.rows();
  if (logit_head_.cols() != m || smoothing_head_.cols() != m) {
    throw DimensionError("Model: heads " + logit_head_.shape_string() + " / " +
                         smoothing_head_.shape_string() + " do not match embedding width " +
                         std::to_string(m));
  }
  const std::size_t expected_rows =
      head_mode_ == SmoothingHeadMode::Distribution ? logit_head_.rows() : 1;
  if (logit_head_.rows() < 2 || smoothing_head_.rows() != expected_rows) {
    throw DimensionError("Model: smoothing head " + smoothing_head_.shape_string() + " invalid for " +
                         to_string(head_mode_) + " mode with K=" + std::to_string(logit_head_.rows()));
  }
}

Model Model::initialize(const ModelShape& shape, Rng& rng) {
  if (shape.input_dim == 0 || shape.hidden.empty() || shape.num_classes < 2) {
    throw ConfigError("Model: need input_dim > 0, at least one hidden layer, and K >= 2");
  }
  std::vector<DenseLayer> trunk;
  std::size_t fan_in = shape.input_dim;
  for (std::size_t width : shape.hidden) {
    if (width == 0) throw ConfigError("Model: hidden widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix weight = uniform_init(width, fan_in, bound, rng);
    Matrix bias = uniform_init(width, 1, bound, rng);
    trunk.push_back({std::move(weight), std::move(bias)});
    fan_in = width;
  }
  const std::size_t m = fan_in;
  const double bound = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix logit_head = uniform_init(shape.num_classes, m, bound, rng);
  const std::size_t t_rows = shape.head_mode == SmoothingHeadMode::Distribution ? shape.num_classes : 1;
  Matrix smoothing_head = uniform_init(t_rows, m, bound, rng);
  return Model(std::move(trunk), std::move(logit_head), std::move(smoothing_head), shape.head_mode);
}

std::vector<Matrix*> Model::tensors() {
  std::vector<Matrix*> out;
  for (auto& layer : trunk_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&logit_head_);
  out.push_back(&smoothing_head_);
  return out;
}

std::vector<const Matrix*> Model::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : trunk_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&logit_head_);
  out.push_back(&smoothing_head_);
  return out;
}

std::vector<std::string> Model::tensor_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < trunk_.size(); ++l) {
    out.push_back("trunk." + std::to_string(l) + ".weight");
    out.push_back("trunk." + std::to_string(l) + ".bias");
  }
  out.emplace_back("logit_head");
  out.emplace_back("smoothing_head");
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* t : tensors()) n += t->size();
  return n;
}

bool Model::all_finite() const {
  const auto ts = tensors();
  return std::all_of(ts.begin(), ts.end(), [](const Matrix* t) { return t->all_finite(); });
}

bool operator==(const Model& a, const Model& b) {
  if (a.head_mode_ != b.head_mode_ || a.trunk_.size() != b.trunk_.size()) return false;
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  for (const Matrix* t : model.tensors()) g.tensors.emplace_back(t->rows(), t->cols());
  return g;
}

ForwardTrace forward(const Model& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    throw DimensionError("forward: inputs " + inputs.shape_string() + " but model expects width " +
                         std::to_string(model.input_dim()));
  }
  ForwardTrace trace;
  trace.inputs = inputs;
  const Matrix* x = &trace.inputs;
  for (const auto& layer : model.trunk()) {
    trace.pre_activations.push_back(add_row_vector(matmul_bt(*x, layer.weight), layer.bias));
    trace.activations.push_back(relu(trace.pre_activations.back()));
    x = &trace.activations.back();
  }
  const Matrix& s = trace.embedding();
  trace.logits = matmul_bt(s, model.logit_head());
  trace.smoothing_logits = matmul_bt(s, model.smoothing_head());
  trace.squashed = sigmoid(trace.smoothing_logits);
  trace.probs = softmax_rows(trace.logits);
  if (model.head_mode() == SmoothingHeadMode::Distribution) {
    trace.smoothing = softmax_rows(trace.squashed);
  }
  return trace;
}

Matrix smoothing_target(const ForwardTrace& trace, const Matrix& q, SmoothingHeadMode mode) {
  if (mode == SmoothingHeadMode::Distribution) return trace.smoothing;
  const double uniform = 1.0 / static_cast<double>(q.cols());
  Matrix r(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const double s = trace.squashed(i, 0);
    for (std::size_t k = 0; k < q.cols(); ++k) r(i, k) = (1.0 - s) * q(i, k) + s * uniform;
  }
  return r;
}

double loss_value(const Model& model, const ForwardTrace& trace, const Matrix& q, double w) {
  check_targets(q, trace, w);
  const Matrix r = smoothing_target(trace, q, model.head_mode());
  return mixed_cross_entropy(q, r, log_softmax_rows(trace.logits), w);
}

LossResult loss_and_backward(const Model& model, const ForwardTrace& trace, const Matrix& q, double w) {
  check_targets(q, trace, w);
  const std::size_t batch = q.rows();
  const std::size_t classes = q.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const Matrix r = smoothing_target(trace, q, model.head_mode());
  const Matrix log_p = log_softmax_rows(trace.logits);

  LossResult result;
  result.loss = mixed_cross_entropy(q, r, log_p, w);

  // dL/dz = p - ((1-w) q + w r), averaged over the batch.
  Matrix dz(batch, classes);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t k = 0; k < classes; ++k) {
      dz(i, k) = (trace.probs(i, k) - ((1.0 - w) * q(i, k) + w * r(i, k))) * inv_batch;
    }
  }

  // dL/da through the sigmoid of the smoothing head.
  Matrix da(trace.smoothing_logits.rows(), trace.smoothing_logits.cols());
  if (model.head_mode() == SmoothingHeadMode::Distribution) {
    const Matrix& u = trace.smoothing;
    for (std::size_t i = 0; i < batch; ++i) {
      // With c_k = -w log p_k: dL/dv_j = u_j (c_j - sum_k u_k c_k).
      double mean_c = 0.0;
      for (std::size_t k = 0; k < classes; ++k) mean_c += u(i, k) * (-w * log_p(i, k));
      for (std::size_t j = 0; j < classes; ++j) {
        const double dv = u(i, j) * (-w * log_p(i, j) - mean_c);
        const double v = trace.squashed(i, j);
        da(i, j) = dv * v * (1.0 - v) * inv_batch;
      }
    }
  } else {
    const double uniform = 1.0 / static_cast<double>(classes);
    for (std::size_t i = 0; i < batch; ++i) {
      double ds = 0.0;
      for (std::size_t k = 0; k < classes; ++k) ds -= w * (uniform - q(i, k)) * log_p(i, k);
      const double s = trace.squashed(i, 0);
      da(i, 0) = ds * s * (1.0 - s) * inv_batch;
    }
  }

  const Matrix& embedding = trace.embedding();
  const std::size_t n_trunk = model.trunk().size();
  result.grads.tensors.resize(2 * n_trunk + 2);
  result.grads.tensors[2 * n_trunk] = matmul_at(dz, embedding);
  result.grads.tensors[2 * n_trunk + 1] = matmul_at(da, embedding);

  Matrix d_act = add(matmul(dz, model.logit_head()), matmul(da, model.smoothing_head()));
  for (std::size_t l = n_trunk; l-- > 0;) {
    const Matrix& pre = trace.pre_activations[l];
    Matrix d_pre = d_act;
    auto dp = d_pre.data();
    auto pv = pre.data();
    for (std::size_t e = 0; e < dp.size(); ++e) {
      if (pv[e] <= 0.0) dp[e] = 0.0;
    }
    const Matrix& layer_input = l == 0 ? trace.inputs : trace.activations[l - 1];
    result.grads.tensors[2 * l] = matmul_at(d_pre, layer_input);
    result.grads.tensors[2 * l + 1] = column_sum(d_pre);
    if (l > 0) d_act = matmul(d_pre, model.trunk()[l].weight);
  }
  result.logit_grad = std::move(dz);
  return result;
}

OptimizerState OptimizerState::for_model(const Model& model, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optimizer: momentum must lie in [0,1)");
  OptimizerState state;
  state.learning_rate = learning_rate;
  state.momentum = momentum;
  for (const Matrix* t : model.tensors()) state.velocity.emplace_back(t->rows(), t->cols());
  return state;
}

void sgd_step(Model& model, const Gradients& grads, OptimizerState& state) {
  auto params = model.tensors();
  if (grads.tensors.size() != params.size() || state.velocity.size() != params.size()) {
    throw DimensionError("sgd_step: gradient/velocity count does not match model");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    const Matrix& g = grads.tensors[t];
    Matrix& v = state.velocity[t];
    if (g.rows() != p.rows() || g.cols() != p.cols() || v.rows() != p.rows() || v.cols() != p.cols()) {
      throw DimensionError("sgd_step: tensor " + std::to_string(t) + " param " + p.shape_string() +
                           " grad " + g.shape_string() + " velocity " + v.shape_string());
    }
    auto pd = p.data();
    auto gd = g.data();
    auto vd = v.data();
    for (std::size_t e = 0; e < pd.size(); ++e) {
      vd[e] = state.momentum * vd[e] - state.learning_rate * gd[e];
      pd[e] += vd[e];
    }
  }
  if (!model.all_finite()) throw NumericError("sgd_step: parameters became non-finite");
}

double GradCheckReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& t : tensors) m = std::max(m, t.max_relative_error);
  return m;
}

GradCheckReport compare_gradients(const Model& model, const Matrix& inputs, const TargetFn& targets,
                                  const Gradients& analytic, double tolerance, double epsilon) {
  const auto [q, w] = targets(forward(model, inputs));
  Model probe = model;
  auto params = probe.tensors();
  const auto names = probe.tensor_names();
  if (analytic.tensors.size() != params.size()) {
    throw DimensionError("gradient check: gradient count does not match model");
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t]->data();
    auto grad = analytic.tensors[t].data();
    if (grad.size() != values.size()) {
      throw DimensionError("gradient check: shape mismatch for " + names[t]);
    }
    TensorCheck check{names[t], 0.0};
    for (std::size_t e = 0; e < values.size(); ++e) {
      const double saved = values[e];
      values[e] = saved + epsilon;
      const double up = loss_value(probe, forward(probe, inputs), q, w);
      values[e] = saved - epsilon;
      const double down = loss_value(probe, forward(probe, inputs), q, w);
      values[e] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom = std::max({std::abs(grad[e]), std::abs(numeric), 1e-6});
      check.max_relative_error = std::max(check.max_relative_error, std::abs(grad[e] - numeric) / denom);
    }
    report.tensors.push_back(std::move(check));
  }
  report.passed = report.max_relative_error() < tolerance;
  return report;
}

GradCheckReport gradient_check(const Model& model, const Matrix& inputs, const TargetFn& targets,
                               double tolerance, double epsilon) {
  const ForwardTrace trace = forward(model, inputs);
  const auto [q, w] = targets(trace);
  const LossResult analytic = loss_and_backward(model, trace, q, w);
  return compare_gradients(model, inputs, targets, analytic.grads, tolerance, epsilon);
}

}  // namespace pls
