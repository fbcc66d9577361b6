#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "pls/data.hpp"
#include "pls/nn.hpp"
#include "pls/smoothing.hpp"

namespace pls {

inline constexpr std::size_t kDefaultEceBins = 15;

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct EceResult {
  double ece = 0.0;
  std::vector<CalibrationBin> bins;
};

// Equal-width bins over [0,1]; confidence c goes to bin floor(c * num_bins), with c = 1
// in the last bin. ECE = sum_b |B_b|/n * |acc(B_b) - conf(B_b)|.
EceResult ece(std::span<const double> confidences, const std::vector<bool>& correct,
              std::size_t num_bins = kDefaultEceBins);

// Fixed-width histogram over [min_score, 1]; scores below min_score are dropped.
struct Histogram {
  double min_score = 0.0;
  double bin_width = 0.05;
  std::vector<std::size_t> counts;

  double lower(std::size_t bin) const { return min_score + bin_width * static_cast<double>(bin); }
  double upper(std::size_t bin) const { return min_score + bin_width * static_cast<double>(bin + 1); }
  std::size_t total() const;
};

Histogram histogram(std::span<const double> scores, double bin_width, double min_score = 0.0);

struct ScoreSummary {
  std::size_t count = 0;
  double median = 0.0;
  double fraction_above_0_9 = 0.0;
  double mean = 0.0;
};

ScoreSummary summarize_scores(std::span<const double> scores);

// Softmax of temperature * logits, evaluated in chunks.
struct Predictions {
  Matrix probs;
  std::vector<std::size_t> predicted;  // argmax, ties -> lowest class index
  std::vector<double> winning_scores;  // max softmax value per row
  Matrix logits;
};

Predictions predict(const Model& model, const Matrix& inputs, double temperature = 1.0);

std::size_t argmax_row(std::span<const double> row);

// Fraction of rows whose argmax differs from the label.
double error_rate(const Model& model, const Dataset& dataset);
double error_rate(const Matrix& scores, std::span<const std::size_t> labels);

// {0.05, 0.10, ..., 2.00}
std::vector<double> default_temperature_grid();

struct TemperatureSearch {
  double temperature = 1.0;
  double ece_at_one = 0.0;       // calibration-split ECE without scaling
  double ece_at_best = 0.0;      // calibration-split ECE at the chosen temperature
  std::vector<double> grid;
  std::vector<double> grid_ece;  // calibration-split ECE for every grid value
};

// Picks the grid value t minimising the ECE of softmax(t * z) on the calibration split;
// ties go to the smallest t.
TemperatureSearch temperature_search(const Model& model, const Dataset& calibration,
                                     std::span<const double> grid, std::size_t num_bins = kDefaultEceBins);

struct EvalOptions {
  std::size_t ece_bins = kDefaultEceBins;
  double hist_bin_width = 0.05;
  double min_score = 0.0;
  double temperature = 1.0;
};

struct EvalReport {
  std::optional<double> error_rate;
  std::vector<double> winning_scores;
  Histogram histogram;
  std::optional<EceResult> calibration;
  std::optional<double> temperature;
  ScoreSummary summary;

  nlohmann::json summary_json() const;
};

// Error rate, 15-bin ECE, histogram and summary on a labelled dataset.
EvalReport evaluate(const Model& model, const Dataset& dataset, const EvalOptions& options = {});

// Winning-score histogram and summary only.
EvalReport winning_score_histogram(const Model& model, const Dataset& dataset, double bin_width,
                                   double min_score = 0.0);

// Confidence-only report on inputs from another distribution.
EvalReport ood_report(const Model& model, const Dataset& other, const EvalOptions& options = {});

struct TrainingSignalStats {
  std::size_t pairs = 0;                         // midpoints with two distinct labels
  std::vector<double> ground_truth_mass;         // per class: mean target mass on that class when it is a ground truth
  std::vector<std::size_t> ground_truth_count;   // per class occurrences as a ground truth
  std::vector<double> top_non_ground_truth;      // mean of the r-th largest non-ground-truth target, r = 1..5
  std::vector<double> mean_target;               // average target row
};

// Pairs every sample with a seeded random partner, keeps pairs with distinct labels,
// and averages the targets the strategy would train the midpoints toward.
TrainingSignalStats training_signal_stats(const Model& model, const Dataset& dataset,
                                          const TargetStrategy& strategy, std::uint64_t seed = 0);

void write_histogram_csv(std::ostream& out, const Histogram& h, std::span<const std::string> provenance = {});
void write_ece_csv(std::ostream& out, const EceResult& e, std::span<const std::string> provenance = {});

}  // namespace pls
