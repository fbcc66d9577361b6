#include "pls/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "pls/errors.hpp"
#include "pls/eval.hpp"
#include "pls/rng.hpp"

namespace pls {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

double get_real(const json& j, const char* key, double fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(context + "." + key + ": expected a number");
  return j[key].get<double>();
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!non_negative_integer(j[key])) throw ConfigError(context + "." + key + ": expected a non-negative integer");
  return j[key].get<std::size_t>();
}

bool get_bool(const json& j, const char* key, bool fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(context + "." + key + ": expected true/false");
  return j[key].get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j[key].is_string()) throw ConfigError(context + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

std::vector<double> get_reals(const json& j, const char* key, std::vector<double> fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array()) throw ConfigError(context + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ConfigError(context + "." + key + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

DatasetConfig parse_dataset_config(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  DatasetConfig d;
  d.kind = get_string(j, "kind", context);
  if (j.contains("seed")) {
    if (!non_negative_integer(j["seed"])) throw ConfigError(context + ".seed: expected a non-negative integer");
    d.seed = j["seed"].get<std::uint64_t>();
  }
  if (d.kind == "blobs") {
    check_keys(j, {"kind", "seed", "num_classes", "per_class", "dim", "center_spread", "noise_sigma", "center_shift",
                   "test_fraction", "standardize"},
               context);
    d.num_classes = get_count(j, "num_classes", d.num_classes, context);
    d.per_class = get_count(j, "per_class", d.per_class, context);
    d.dim = get_count(j, "dim", d.dim, context);
    d.center_spread = get_real(j, "center_spread", d.center_spread, context);
    d.noise_sigma = get_real(j, "noise_sigma", d.noise_sigma, context);
    d.center_shift = get_real(j, "center_shift", d.center_shift, context);
    d.test_fraction = get_real(j, "test_fraction", d.test_fraction, context);
    d.standardize = get_bool(j, "standardize", true, context);
    if (d.num_classes < 2 || d.per_class < 1 || d.dim < 1) {
      throw ConfigError(context + ": blobs need num_classes >= 2, per_class >= 1, dim >= 1");
    }
    if (!(d.test_fraction >= 0.0 && d.test_fraction < 1.0)) {
      throw ConfigError(context + ".test_fraction must lie in [0,1)");
    }
  } else if (d.kind == "idx") {
    check_keys(j, {"kind", "seed", "num_classes", "train_images", "train_labels", "test_images", "test_labels",
                   "train_limit", "test_limit", "standardize"},
               context);
    d.num_classes = get_count(j, "num_classes", 10, context);
    d.train_images = get_string(j, "train_images", context);
    d.train_labels = get_string(j, "train_labels", context);
    d.test_images = get_string(j, "test_images", context);
    d.test_labels = get_string(j, "test_labels", context);
    d.train_limit = get_count(j, "train_limit", 0, context);
    d.test_limit = get_count(j, "test_limit", 0, context);
    d.standardize = get_bool(j, "standardize", false, context);
  } else if (d.kind == "uniform_noise") {
    check_keys(j, {"kind", "seed", "count", "dim"}, context);
    d.count = get_count(j, "count", d.count, context);
    d.dim = get_count(j, "dim", d.dim, context);
    d.standardize = false;
    if (d.count == 0 || d.dim == 0) throw ConfigError(context + ": uniform_noise needs count > 0 and dim > 0");
  } else {
    throw ConfigError(context + ".kind: unknown dataset kind '" + d.kind + "'");
  }
  return d;
}

json dataset_config_to_json(const DatasetConfig& d) {
  json j{{"kind", d.kind}};
  if (d.seed) j["seed"] = *d.seed;
  if (d.kind == "blobs") {
    j["num_classes"] = d.num_classes;
    j["per_class"] = d.per_class;
    j["dim"] = d.dim;
    j["center_spread"] = d.center_spread;
    j["noise_sigma"] = d.noise_sigma;
    j["center_shift"] = d.center_shift;
    j["test_fraction"] = d.test_fraction;
    j["standardize"] = d.standardize;
  } else if (d.kind == "idx") {
    j["num_classes"] = d.num_classes;
    j["train_images"] = d.train_images.string();
    j["train_labels"] = d.train_labels.string();
    j["test_images"] = d.test_images.string();
    j["test_labels"] = d.test_labels.string();
    j["train_limit"] = d.train_limit;
    j["test_limit"] = d.test_limit;
    j["standardize"] = d.standardize;
  } else {
    j["count"] = d.count;
    j["dim"] = d.dim;
  }
  return j;
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, {"seed", "dataset", "model", "strategy", "train", "eval"}, "config");
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (j.contains("seed")) {
    if (!non_negative_integer(j["seed"])) throw ConfigError("config.seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset' block");
  c.dataset = parse_dataset_config(j["dataset"], "dataset");
  if (c.dataset.kind == "uniform_noise") throw ConfigError("dataset: uniform_noise has no labels to train on");

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"hidden", "num_classes"}, "model");
    if (m.contains("hidden")) {
      if (!m["hidden"].is_array() || m["hidden"].empty()) throw ConfigError("model.hidden: expected a non-empty array");
      c.model.hidden.clear();
      for (const auto& v : m["hidden"]) {
        if (!non_negative_integer(v) || v.get<std::size_t>() == 0) {
          throw ConfigError("model.hidden: widths must be positive integers");
        }
        c.model.hidden.push_back(v.get<std::size_t>());
      }
    }
    if (m.contains("num_classes")) c.model.num_classes = get_count(m, "num_classes", 0, "model");
  }
  if (c.model.num_classes && *c.model.num_classes != c.dataset.num_classes) {
    throw ConfigError("model.num_classes does not match the dataset's class count");
  }

  if (j.contains("strategy")) c.train.strategy = strategy_from_json(j["strategy"]);
  c.train.seed = c.seed;
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, {"epochs", "batch_size", "learning_rate", "momentum", "alternate_originals", "eval_every",
                   "lr_decay_at", "lr_decay_factor"},
               "train");
    c.train.epochs = get_count(t, "epochs", c.train.epochs, "train");
    c.train.batch_size = get_count(t, "batch_size", c.train.batch_size, "train");
    c.train.learning_rate = get_real(t, "learning_rate", c.train.learning_rate, "train");
    c.train.momentum = get_real(t, "momentum", c.train.momentum, "train");
    if (t.contains("alternate_originals")) c.train.alternate_originals = get_bool(t, "alternate_originals", true, "train");
    c.train.eval_every = get_count(t, "eval_every", c.train.eval_every, "train");
    c.train.lr_decay_at = get_reals(t, "lr_decay_at", c.train.lr_decay_at, "train");
    c.train.lr_decay_factor = get_real(t, "lr_decay_factor", c.train.lr_decay_factor, "train");
  }
  c.train.validate();

  c.eval.temperature_grid = default_temperature_grid();
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"ece_bins", "hist_bin_width", "min_score", "calibration_fraction", "temperature_grid", "ood"},
               "eval");
    c.eval.ece_bins = get_count(e, "ece_bins", c.eval.ece_bins, "eval");
    c.eval.hist_bin_width = get_real(e, "hist_bin_width", c.eval.hist_bin_width, "eval");
    c.eval.min_score = get_real(e, "min_score", c.eval.min_score, "eval");
    c.eval.calibration_fraction = get_real(e, "calibration_fraction", c.eval.calibration_fraction, "eval");
    c.eval.temperature_grid = get_reals(e, "temperature_grid", c.eval.temperature_grid, "eval");
    if (e.contains("ood")) c.eval.ood = parse_dataset_config(e["ood"], "eval.ood");
  }
  if (c.eval.ece_bins == 0) throw ConfigError("eval.ece_bins must be positive");
  if (!(c.eval.calibration_fraction >= 0.0 && c.eval.calibration_fraction < 1.0)) {
    throw ConfigError("eval.calibration_fraction must lie in [0,1)");
  }
  if (c.eval.temperature_grid.empty()) throw ConfigError("eval.temperature_grid must not be empty");
  for (double t : c.eval.temperature_grid) {
    if (!(t > 0.0)) throw ConfigError("eval.temperature_grid values must be positive");
  }
  // Histogram layout is validated up front so bad widths fail before training.
  histogram({}, c.eval.hist_bin_width, c.eval.min_score);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["dataset"] = dataset_config_to_json(dataset);
  j["model"] = {{"hidden", model.hidden}};
  if (model.num_classes) j["model"]["num_classes"] = *model.num_classes;
  j["strategy"] = strategy_to_json(train.strategy);
  json t{{"epochs", train.epochs},
         {"batch_size", train.batch_size},
         {"learning_rate", train.learning_rate},
         {"momentum", train.momentum},
         {"eval_every", train.eval_every},
         {"lr_decay_at", train.lr_decay_at},
         {"lr_decay_factor", train.lr_decay_factor}};
  if (train.alternate_originals) t["alternate_originals"] = *train.alternate_originals;
  j["train"] = std::move(t);
  json e{{"ece_bins", eval.ece_bins},
         {"hist_bin_width", eval.hist_bin_width},
         {"min_score", eval.min_score},
         {"calibration_fraction", eval.calibration_fraction},
         {"temperature_grid", eval.temperature_grid}};
  if (eval.ood) e["ood"] = dataset_config_to_json(*eval.ood);
  j["eval"] = std::move(e);
  return j;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

std::vector<std::string> ExperimentConfig::provenance() const {
  return {"config_hash=" + hash(), "seed=" + std::to_string(seed)};
}

std::uint64_t ExperimentConfig::dataset_seed() const {
  return dataset.seed.value_or(derive_seed(seed, "dataset"));
}

}  // namespace pls
