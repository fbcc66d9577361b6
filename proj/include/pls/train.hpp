#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pls/data.hpp"
#include "pls/nn.hpp"
#include "pls/smoothing.hpp"

namespace pls {

struct TrainConfig {
  TargetStrategy strategy;
  std::size_t epochs = 40;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  // Interleave original-sample steps with midpoint steps. Only PLS variants alternate;
  // unset means "true for PLS".
  std::optional<bool> alternate_originals;
  std::size_t eval_every = 1;
  // Learning rate is multiplied by lr_decay_factor once each listed fraction of the
  // epoch budget has elapsed.
  std::vector<double> lr_decay_at = {0.6, 0.8};
  double lr_decay_factor = 0.1;

  bool alternates() const { return strategy.is_pls() && alternate_originals.value_or(true); }
  double learning_rate_at(std::size_t epoch) const;
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;    // 1-based
  double train_loss = 0.0;  // mean step loss over the epoch
  std::optional<double> val_error;
  double timestamp = 0.0;   // seconds since training started
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  std::string checkpoint;  // path of the final checkpoint, when one was written

  // "epoch,train_loss,val_error" with one row per epoch; timestamps are left out so the
  // file is byte-reproducible. `provenance` lines are written first as "# ..." comments.
  void write_csv(std::ostream& out, std::span<const std::string> provenance = {}) const;
};

// Soft target handed to the first cross-entropy term and the weight of the learned
// smoothing term for one optimizer step. step_labels are the labels of the (possibly
// paired) inputs actually fed this step.
struct StepTargets {
  Matrix q;
  double w = 0.0;
};

StepTargets build_step_targets(const TargetStrategy& strategy, const Matrix& step_labels);

// The distribution the loss actually pulls p toward: (1 - w) q + w r(trace).
Matrix realized_targets(const StepTargets& targets, const ForwardTrace& trace, SmoothingHeadMode mode);

// Initial parameters drawn from the "init" sub-stream of config.seed.
Model initialize_model(const TrainConfig& config, std::span<const std::size_t> hidden, const Dataset& dataset);

struct TrainResult {
  Model model;
  RunLog log;
};

TrainResult train(const TrainConfig& config, Model initial, const Dataset& train_set,
                  const Dataset* val_set = nullptr);

TrainResult train(const TrainConfig& config, std::span<const std::size_t> hidden, const Dataset& train_set,
                  const Dataset* val_set = nullptr);

// Finite-difference check of the loss the strategy would train on for this batch.
// Pairing strategies use a seeded permutation (and lambda = 0.5 unless fixed) so the
// checked targets are soft.
GradCheckReport gradient_check(const Model& model, const Batch& batch, const TargetStrategy& strategy,
                               double tolerance, std::uint64_t seed = 0);

}  // namespace pls
