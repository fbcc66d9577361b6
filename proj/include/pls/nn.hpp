#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pls/rng.hpp"
#include "pls/tensor.hpp"

namespace pls {

// What the second head predicts from the shared embedding.
enum class SmoothingHeadMode {
  Distribution,  // W_t is K x m; u' = softmax(sigmoid(S W_t^T))
  Coefficient,   // W_t is 1 x m; s = sigmoid(S W_t^T) interpolates q toward uniform
};

std::string to_string(SmoothingHeadMode mode);
SmoothingHeadMode head_mode_from_string(const std::string& s);

// Fully connected layer followed by ReLU. weight is (out x in), bias is (out x 1).
struct DenseLayer {
  Matrix weight;
  Matrix bias;
};

struct ModelShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // trunk widths; the last one is the embedding width m
  std::size_t num_classes = 0;
  SmoothingHeadMode head_mode = SmoothingHeadMode::Distribution;
};

// MLP trunk producing the embedding S, plus two bias-free linear heads over S:
// the logit head (K x m) and the smoothing head (K x m, or 1 x m in coefficient mode).
class Model {
 public:
  Model() = default;
  Model(std::vector<DenseLayer> trunk, Matrix logit_head, Matrix smoothing_head,
        SmoothingHeadMode head_mode);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor, drawn in parameter order.
  static Model initialize(const ModelShape& shape, Rng& rng);

  const std::vector<DenseLayer>& trunk() const { return trunk_; }
  const Matrix& logit_head() const { return logit_head_; }
  const Matrix& smoothing_head() const { return smoothing_head_; }
  Matrix& smoothing_head() { return smoothing_head_; }
  SmoothingHeadMode head_mode() const { return head_mode_; }

  std::size_t input_dim() const { return trunk_.front().weight.cols(); }
  std::size_t embed_dim() const { return logit_head_.cols(); }
  std::size_t num_classes() const { return logit_head_.rows(); }

  // Canonical parameter order: trunk weight/bias pairs, logit head, smoothing head.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::string> tensor_names() const;
  std::size_t parameter_count() const;

  bool all_finite() const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  void validate() const;

  std::vector<DenseLayer> trunk_;
  Matrix logit_head_;
  Matrix smoothing_head_;
  SmoothingHeadMode head_mode_ = SmoothingHeadMode::Distribution;
};

struct ForwardTrace {
  Matrix inputs;                        // B x D
  std::vector<Matrix> pre_activations;  // one per trunk layer
  std::vector<Matrix> activations;      // relu(pre_activation); the last is the embedding S
  Matrix logits;                        // z, B x K
  Matrix smoothing_logits;              // a = S W_t^T, B x K (B x 1 in coefficient mode)
  Matrix squashed;                      // v = sigmoid(a)
  Matrix probs;                         // p = softmax(z)
  Matrix smoothing;                     // u' = softmax(v); empty in coefficient mode

  const Matrix& embedding() const { return activations.back(); }
};

// One tensor per model parameter, in Model::tensors() order.
struct Gradients {
  std::vector<Matrix> tensors;

  static Gradients zeros_like(const Model& model);
};

struct LossResult {
  double loss = 0.0;
  Gradients grads;
  Matrix logit_grad;  // dL/dz, kept for inspection
};

ForwardTrace forward(const Model& model, const Matrix& inputs);

// Per-row smoothing distribution mixed into the target with weight w:
// u' in distribution mode, (1-s) q + s/K in coefficient mode.
Matrix smoothing_target(const ForwardTrace& trace, const Matrix& q, SmoothingHeadMode mode);

// Batch mean of (1-w) H(q, p) + w H(r, p), with r = smoothing_target(trace, q), and the
// analytic gradient of that loss w.r.t. every parameter. Both heads backpropagate into the
// shared trunk.
LossResult loss_and_backward(const Model& model, const ForwardTrace& trace, const Matrix& q, double w);

// Loss only (no backward pass).
double loss_value(const Model& model, const ForwardTrace& trace, const Matrix& q, double w);

struct OptimizerState {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::vector<Matrix> velocity;

  static OptimizerState for_model(const Model& model, double learning_rate, double momentum);
};

// velocity <- momentum * velocity - lr * grad; param <- param + velocity.
void sgd_step(Model& model, const Gradients& grads, OptimizerState& state);

// Soft targets (q) and mixing weight (w) for a gradient check; called once on the
// unperturbed forward trace.
using TargetFn = std::function<std::pair<Matrix, double>(const ForwardTrace&)>;

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;
  bool passed = false;

  double max_relative_error() const;
};

// Compares `analytic` with central finite differences of loss_value, element by element.
// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckReport compare_gradients(const Model& model, const Matrix& inputs, const TargetFn& targets,
                                  const Gradients& analytic, double tolerance, double epsilon = 1e-5);

GradCheckReport gradient_check(const Model& model, const Matrix& inputs, const TargetFn& targets,
                               double tolerance, double epsilon = 1e-5);

}  // namespace pls
