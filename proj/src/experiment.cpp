#include "pls/experiment.hpp"

#include <fstream>
#include <numeric>

#include "pls/checkpoint.hpp"
#include "pls/errors.hpp"
#include "pls/rng.hpp"

namespace pls {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

Dataset take_first(const Dataset& ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  std::vector<std::size_t> idx(limit);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return ds.subset(idx, ds.name);
}

BlobSpec blob_spec(const DatasetConfig& d, std::uint64_t seed) {
  BlobSpec spec;
  spec.seed = seed;
  spec.num_classes = d.num_classes;
  spec.per_class = d.per_class;
  spec.dim = d.dim;
  spec.center_spread = d.center_spread;
  spec.noise_sigma = d.noise_sigma;
  spec.center_shift = d.center_shift;
  return spec;
}

void normalise(Dataset& ds, const Standardizer& s) {
  if (!s.empty()) ds.inputs = s.apply(ds.inputs);
}

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn fn) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  fn(out);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config, const Standardizer* fixed) {
  const DatasetConfig& d = config.dataset;
  Dataset train_all;
  Dataset test;
  if (d.kind == "blobs") {
    const Dataset all = gen_blobs(blob_spec(d, config.dataset_seed()));
    const double fractions[] = {1.0 - d.test_fraction, d.test_fraction};
    auto parts = split(all, fractions, derive_seed(config.seed, "test-split"));
    train_all = std::move(parts[0]);
    test = std::move(parts[1]);
    train_all.name = "blobs/train";
    test.name = "blobs/test";
  } else if (d.kind == "idx") {
    train_all = take_first(load_idx(resolve(config.base_dir, d.train_images), resolve(config.base_dir, d.train_labels),
                                    d.num_classes),
                           d.train_limit);
    test = take_first(load_idx(resolve(config.base_dir, d.test_images), resolve(config.base_dir, d.test_labels),
                               d.num_classes),
                      d.test_limit);
    if (train_all.dim() != test.dim()) throw ConfigError("idx train/test image sizes differ");
  } else {
    throw ConfigError("dataset kind '" + d.kind + "' cannot be trained on");
  }

  PreparedData data;
  if (config.eval.calibration_fraction > 0.0) {
    const double fractions[] = {1.0 - config.eval.calibration_fraction, config.eval.calibration_fraction};
    auto parts = split(train_all, fractions, derive_seed(config.seed, "calibration-split"));
    data.fit = std::move(parts[0]);
    data.val = std::move(parts[1]);
  } else {
    data.fit = std::move(train_all);
    data.val = Dataset{Matrix(0, data.fit.dim()), {}, data.fit.num_classes, "empty"};
  }
  data.test = std::move(test);
  if (fixed != nullptr) {
    data.standardizer = *fixed;
  } else if (d.standardize) {
    data.standardizer = Standardizer::fit(data.fit.inputs);
  }
  normalise(data.fit, data.standardizer);
  normalise(data.val, data.standardizer);
  normalise(data.test, data.standardizer);
  if (config.eval.ood) data.ood = prepare_ood(config, *config.eval.ood, data.standardizer);
  return data;
}

Dataset prepare_ood(const ExperimentConfig& config, const DatasetConfig& ood, const Standardizer& standardizer) {
  Dataset ds;
  if (ood.kind == "blobs") {
    // Same seed as the training blobs unless overridden, so only the shift differs.
    ds = gen_blobs(blob_spec(ood, ood.seed.value_or(config.dataset_seed())));
    ds.name = "ood-blobs";
  } else if (ood.kind == "uniform_noise") {
    ds = gen_uniform_noise(ood.seed.value_or(derive_seed(config.seed, "ood-noise")), ood.count, ood.dim,
                           config.dataset.num_classes);
    return ds;
  } else {
    ds = take_first(load_idx(resolve(config.base_dir, ood.test_images), resolve(config.base_dir, ood.test_labels),
                             ood.num_classes),
                    ood.test_limit);
  }
  if (!standardizer.empty() && ds.dim() != standardizer.mean.size()) {
    throw ConfigError("eval.ood: dimension " + std::to_string(ds.dim()) + " does not match training data");
  }
  normalise(ds, standardizer);
  return ds;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  TrainResult trained = train(config.train, config.model.hidden, data.fit, data.val.size() > 0 ? &data.val : nullptr);
  EvalOptions options;
  options.ece_bins = config.eval.ece_bins;
  options.hist_bin_width = config.eval.hist_bin_width;
  options.min_score = config.eval.min_score;
  ExperimentResult result{std::move(trained.model), std::move(trained.log), {}, std::nullopt};
  result.test_report = evaluate(result.model, data.test, options);
  if (data.ood) result.ood_report = ood_report(result.model, *data.ood, options);
  return result;
}

json checkpoint_metadata(const ExperimentConfig& config, const Standardizer& standardizer) {
  json m;
  m["config"] = config.to_json();
  m["config_hash"] = config.hash();
  m["seed"] = config.seed;
  m["strategy"] = config.train.strategy.label();
  if (!standardizer.empty()) m["standardizer"] = {{"mean", standardizer.mean}, {"stddev", standardizer.stddev}};
  return m;
}

Standardizer standardizer_from_metadata(const json& metadata) {
  Standardizer s;
  if (!metadata.contains("standardizer")) return s;
  try {
    s.mean = metadata["standardizer"].at("mean").get<std::vector<double>>();
    s.stddev = metadata["standardizer"].at("stddev").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint standardizer: ") + e.what());
  }
  if (s.mean.size() != s.stddev.size()) throw FormatError("checkpoint standardizer: length mismatch");
  return s;
}

void write_train_artifacts(const ExperimentConfig& config, const PreparedData& data, const ExperimentResult& result,
                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto provenance = config.provenance();
  const auto checkpoint_path = out_dir / "checkpoint.json";
  save_checkpoint(checkpoint_path, result.model, checkpoint_metadata(config, data.standardizer));
  write_file(out_dir / "runlog.csv", [&](std::ostream& out) { result.log.write_csv(out, provenance); });
  write_file(out_dir / "histogram.csv",
             [&](std::ostream& out) { write_histogram_csv(out, result.test_report.histogram, provenance); });
  write_file(out_dir / "ece.csv",
             [&](std::ostream& out) { write_ece_csv(out, *result.test_report.calibration, provenance); });
  if (result.ood_report) {
    write_file(out_dir / "ood_histogram.csv",
               [&](std::ostream& out) { write_histogram_csv(out, result.ood_report->histogram, provenance); });
  }
  json report;
  report["config_hash"] = config.hash();
  report["seed"] = config.seed;
  report["strategy"] = config.train.strategy.label();
  report["checkpoint"] = checkpoint_path.filename().string();
  report["train_size"] = data.fit.size();
  report["val_size"] = data.val.size();
  report["test"] = result.test_report.summary_json();
  if (!result.log.epochs.empty()) report["final_train_loss"] = result.log.epochs.back().train_loss;
  if (result.ood_report) report["ood"] = result.ood_report->summary_json();
  write_file(out_dir / "report.json", [&](std::ostream& out) { out << report.dump(2) << '\n'; });
}

}  // namespace pls
