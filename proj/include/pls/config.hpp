#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pls/data.hpp"
#include "pls/train.hpp"

namespace pls {

// One dataset source. "blobs" and "idx" can be training sets; "uniform_noise" is
// only meaningful as an out-of-distribution set.
struct DatasetConfig {
  std::string kind = "blobs";
  std::optional<std::uint64_t> seed;  // defaults to a sub-stream of the experiment seed

  // blobs
  std::size_t num_classes = 3;
  std::size_t per_class = 1334;
  std::size_t dim = 20;
  double center_spread = 1.0;
  double noise_sigma = 1.0;
  double center_shift = 0.0;
  double test_fraction = 0.25;
  bool standardize = true;

  // idx (paths relative to the config file)
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_limit = 0;  // 0 = all rows
  std::size_t test_limit = 0;

  // uniform_noise
  std::size_t count = 1000;
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {128, 128};
  std::optional<std::size_t> num_classes;  // checked against the dataset when given
};

struct EvalConfig {
  std::size_t ece_bins = 15;
  double hist_bin_width = 0.05;
  double min_score = 0.0;
  double calibration_fraction = 0.1;  // share of the training split held out for validation / temperature search
  std::vector<double> temperature_grid;
  std::optional<DatasetConfig> ood;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path base_dir = ".";

  nlohmann::json to_json() const;
  // 16 hex digits of FNV-1a over the canonical JSON form.
  std::string hash() const;
  // "config_hash=<hash>" and "seed=<seed>" for stamping output files.
  std::vector<std::string> provenance() const;
  std::uint64_t dataset_seed() const;
};

// Schema-checks and converts; unknown keys and wrong types throw ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
// Reads and parses a config file; malformed JSON throws ConfigError.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json dataset_config_to_json(const DatasetConfig& d);
DatasetConfig parse_dataset_config(const nlohmann::json& j, const std::string& context);

}  // namespace pls
