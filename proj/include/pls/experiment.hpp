#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "pls/config.hpp"
#include "pls/data.hpp"
#include "pls/eval.hpp"
#include "pls/train.hpp"

namespace pls {

// Splits of one experiment, already normalised.
struct PreparedData {
  Dataset fit;   // optimizer sees only this
  Dataset val;   // calibration holdout from the training split (may be empty)
  Dataset test;
  std::optional<Dataset> ood;
  Standardizer standardizer;  // fitted on `fit`; empty when the dataset is not standardised
};

// `fixed` replaces the standardiser fitted on the training split (e.g. one restored
// from a checkpoint).
PreparedData prepare_data(const ExperimentConfig& config, const Standardizer* fixed = nullptr);

// Out-of-distribution set described by `ood`, normalised like the training data.
Dataset prepare_ood(const ExperimentConfig& config, const DatasetConfig& ood, const Standardizer& standardizer);

struct ExperimentResult {
  Model model;
  RunLog log;
  EvalReport test_report;
  std::optional<EvalReport> ood_report;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data);

// Checkpoint metadata: config, provenance and the input standardiser.
nlohmann::json checkpoint_metadata(const ExperimentConfig& config, const Standardizer& standardizer);
Standardizer standardizer_from_metadata(const nlohmann::json& metadata);

// Writes checkpoint.json, runlog.csv, report.json, histogram.csv, ece.csv
// (and ood_histogram.csv when an OOD set is configured) into out_dir.
void write_train_artifacts(const ExperimentConfig& config, const PreparedData& data, const ExperimentResult& result,
                           const std::filesystem::path& out_dir);

}  // namespace pls
