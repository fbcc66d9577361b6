#include "pls/train.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>

#include "pls/errors.hpp"
#include "pls/eval.hpp"
#include "pls/rng.hpp"

namespace pls {

namespace {

// Inputs and labels fed for one optimizer step.
struct StepBatch {
  Matrix inputs;
  Matrix labels;
};

StepBatch prepare_step(const TrainConfig& config, const Batch& batch, std::size_t step, Rng& pair_rng,
                       Rng& mix_rng) {
  const auto& s = config.strategy;
  if (s.is_pls()) {
    if (config.alternates() && step % 2 == 0) return {batch.inputs, batch.onehot};
    const auto perm = pair_rng.permutation(batch.inputs.rows());
    auto paired = midpoint(batch, perm);
    return {std::move(paired.inputs), std::move(paired.q)};
  }
  if (s.is_mixup()) {
    const double lambda = s.mixup_lambda ? *s.mixup_lambda : mix_rng.uniform();
    const auto perm = pair_rng.permutation(batch.inputs.rows());
    auto paired = mixup(batch, perm, lambda);
    return {std::move(paired.inputs), std::move(paired.q)};
  }
  return {batch.inputs, batch.onehot};
}

}  // namespace

double TrainConfig::learning_rate_at(std::size_t epoch) const {
  double lr = learning_rate;
  for (double frac : lr_decay_at) {
    if (static_cast<double>(epoch) >= frac * static_cast<double>(epochs)) lr *= lr_decay_factor;
  }
  return lr;
}

void TrainConfig::validate() const {
  strategy.validate();
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (strategy.uses_pairs() && batch_size < 2) {
    throw ConfigError("train: pairing strategies need batch_size >= 2");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0,1)");
  if (eval_every == 0) throw ConfigError("train: eval_every must be positive");
  for (double f : lr_decay_at) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("train: lr_decay_at entries must lie in [0,1]");
  }
  if (!(lr_decay_factor > 0.0)) throw ConfigError("train: lr_decay_factor must be positive");
}

void RunLog::write_csv(std::ostream& out, std::span<const std::string> provenance) const {
  for (const auto& line : provenance) out << "# " << line << '\n';
  out << "epoch,train_loss,val_error\n";
  out << std::setprecision(17);
  for (const auto& r : epochs) {
    out << r.epoch << ',' << r.train_loss << ',';
    if (r.val_error) out << *r.val_error;
    out << '\n';
  }
}

StepTargets build_step_targets(const TargetStrategy& strategy, const Matrix& step_labels) {
  switch (strategy.kind) {
    case StrategyKind::Baseline:
    case StrategyKind::Mixup:
    case StrategyKind::PLS_NoLearned:
      return {step_labels, 0.0};
    case StrategyKind::ULS:
      return {uls_target(step_labels, strategy.alpha), 0.0};
    case StrategyKind::MixupULS:
      return {smooth_toward_uniform(step_labels, strategy.alpha), 0.0};
    case StrategyKind::PLS_UD:
      return {ud_smoothing(step_labels, strategy.alpha, strategy.w), 0.0};
    case StrategyKind::PLS:
    case StrategyKind::PLS_Coeff:
      return {step_labels, strategy.w};
  }
  throw ConfigError("build_step_targets: unknown strategy");
}

Matrix realized_targets(const StepTargets& targets, const ForwardTrace& trace, SmoothingHeadMode mode) {
  if (targets.w == 0.0) return targets.q;
  const Matrix r = smoothing_target(trace, targets.q, mode);
  Matrix out(targets.q.rows(), targets.q.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t k = 0; k < out.cols(); ++k)
      out(i, k) = (1.0 - targets.w) * targets.q(i, k) + targets.w * r(i, k);
  return out;
}

Model initialize_model(const TrainConfig& config, std::span<const std::size_t> hidden, const Dataset& dataset) {
  ModelShape shape;
  shape.input_dim = dataset.dim();
  shape.hidden.assign(hidden.begin(), hidden.end());
  shape.num_classes = dataset.num_classes;
  shape.head_mode = config.strategy.head_mode();
  Rng rng(config.seed, "init");
  return Model::initialize(shape, rng);
}

TrainResult train(const TrainConfig& config, Model initial, const Dataset& train_set, const Dataset* val_set) {
  config.validate();
  train_set.validate();
  if (train_set.size() == 0) throw ConfigError("train: empty training set");
  if (initial.num_classes() != train_set.num_classes) {
    throw ConfigError("train: model has K=" + std::to_string(initial.num_classes()) + " but dataset has K=" +
                      std::to_string(train_set.num_classes));
  }
  if (initial.input_dim() != train_set.dim()) {
    throw ConfigError("train: model input width " + std::to_string(initial.input_dim()) +
                      " does not match dataset dimension " + std::to_string(train_set.dim()));
  }
  if (initial.head_mode() != config.strategy.head_mode()) {
    throw ConfigError("train: strategy " + config.strategy.label() + " needs a " +
                      to_string(config.strategy.head_mode()) + " smoothing head");
  }

  TrainResult result{std::move(initial), {}};
  Model& model = result.model;
  OptimizerState opt = OptimizerState::for_model(model, config.learning_rate, config.momentum);
  Rng pair_rng(config.seed, "pairing");
  Rng mix_rng(config.seed, "mixing");
  const auto start = std::chrono::steady_clock::now();

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    opt.learning_rate = config.learning_rate_at(epoch);
    const auto it = batches(train_set, config.batch_size, derive_seed(config.seed, "data"), epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < it.batch_count(); ++b, ++step) {
      const Batch batch = it.batch(b);
      const StepBatch sb = prepare_step(config, batch, step, pair_rng, mix_rng);
      const ForwardTrace trace = forward(model, sb.inputs);
      const StepTargets targets = build_step_targets(config.strategy, sb.labels);
      LossResult lr = loss_and_backward(model, trace, targets.q, targets.w);
      sgd_step(model, lr.grads, opt);
      loss_sum += lr.loss;
      result.log.step_losses.push_back(lr.loss);
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(it.batch_count());
    if (val_set != nullptr && val_set->size() > 0 &&
        ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs)) {
      rec.val_error = error_rate(model, *val_set);
    }
    rec.timestamp = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(rec);
  }
  return result;
}

TrainResult train(const TrainConfig& config, std::span<const std::size_t> hidden, const Dataset& train_set,
                  const Dataset* val_set) {
  return train(config, initialize_model(config, hidden, train_set), train_set, val_set);
}

GradCheckReport gradient_check(const Model& model, const Batch& batch, const TargetStrategy& strategy,
                               double tolerance, std::uint64_t seed) {
  strategy.validate();
  Matrix inputs = batch.inputs;
  Matrix labels = batch.onehot;
  if (strategy.uses_pairs()) {
    Rng rng(seed, "pairing");
    const auto perm = rng.permutation(batch.inputs.rows());
    auto paired = strategy.is_pls() ? midpoint(batch, perm)
                                    : mixup(batch, perm, strategy.mixup_lambda.value_or(0.5));
    inputs = std::move(paired.inputs);
    labels = std::move(paired.q);
  }
  const StepTargets targets = build_step_targets(strategy, labels);
  const TargetFn fn = [&targets](const ForwardTrace&) { return std::make_pair(targets.q, targets.w); };
  return gradient_check(model, inputs, fn, tolerance);
}

}  // namespace pls
