#include "pls/cli.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "pls/checkpoint.hpp"
#include "pls/errors.hpp"
#include "pls/experiment.hpp"
#include "pls/rng.hpp"

namespace pls {

using nlohmann::json;

namespace {

// Maps exceptions to the exit-code contract: bad input is 2, anything else is 1.
template <typename Fn>
int guarded(std::ostream& log, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DimensionError& e) {
    log << "shape error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    log << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = load_experiment_config(config_path);
    const PreparedData data = prepare_data(config);
    log << "train: " << config.train.strategy.label() << " on " << data.fit.size() << " samples, seed "
        << config.seed << ", config " << config.hash() << '\n';
    const ExperimentResult result = run_experiment(config, data);
    write_train_artifacts(config, data, result, out_dir);
    log << "test error " << fmt(*result.test_report.error_rate) << ", ECE " << fmt(result.test_report.calibration->ece)
        << ", median winning score " << fmt(result.test_report.summary.median) << '\n';
    return kExitOk;
  });
}

int cmd_eval(const std::filesystem::path& checkpoint_path, const std::filesystem::path& config_path,
             const EvalFlags& flags, const std::filesystem::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = load_experiment_config(config_path);
    if (flags.ood && !config.eval.ood) throw ConfigError("--ood needs an eval.ood dataset block in the config");
    const Checkpoint cp = load_checkpoint(checkpoint_path);
    const Standardizer standardizer = standardizer_from_metadata(cp.metadata);
    const PreparedData data = prepare_data(config, standardizer.empty() ? nullptr : &standardizer);
    if (data.test.dim() != cp.model.input_dim() || data.test.num_classes != cp.model.num_classes()) {
      throw DimensionError("checkpoint expects " + std::to_string(cp.model.input_dim()) + " inputs and " +
                           std::to_string(cp.model.num_classes()) + " classes; dataset has " +
                           std::to_string(data.test.dim()) + " and " + std::to_string(data.test.num_classes));
    }

    EvalOptions options;
    options.ece_bins = config.eval.ece_bins;
    options.hist_bin_width = config.eval.hist_bin_width;
    options.min_score = config.eval.min_score;
    const EvalReport report = evaluate(cp.model, data.test, options);
    const auto provenance = config.provenance();

    std::filesystem::create_directories(out_dir);
    json summary;
    summary["config_hash"] = config.hash();
    summary["seed"] = config.seed;
    summary["checkpoint"] = checkpoint_path.string();
    if (cp.metadata.contains("config_hash")) summary["checkpoint_config_hash"] = cp.metadata["config_hash"];
    summary["error_rate"] = *report.error_rate;
    if (flags.ece) {
      summary["ece"] = report.calibration->ece;
      std::ostringstream os;
      write_ece_csv(os, *report.calibration, provenance);
      write_text(out_dir / "ece.csv", os.str());
    }
    if (flags.hist) {
      summary["winning_scores"] = report.summary_json();
      std::ostringstream os;
      write_histogram_csv(os, report.histogram, provenance);
      write_text(out_dir / "histogram.csv", os.str());
    }
    if (flags.temperature) {
      if (data.val.size() == 0) throw ConfigError("--temperature needs eval.calibration_fraction > 0");
      const TemperatureSearch ts = temperature_search(cp.model, data.val, config.eval.temperature_grid,
                                                      config.eval.ece_bins);
      EvalOptions scaled = options;
      scaled.temperature = ts.temperature;
      const EvalReport after = evaluate(cp.model, data.test, scaled);
      summary["temperature"] = {{"t", ts.temperature},
                                {"calibration_ece_before", ts.ece_at_one},
                                {"calibration_ece_after", ts.ece_at_best},
                                {"test_ece_before", report.calibration->ece},
                                {"test_ece_after", after.calibration->ece},
                                {"test_error_after", *after.error_rate}};
    }
    if (flags.ood) {
      const EvalReport ood = ood_report(cp.model, *data.ood, options);
      summary["ood"] = ood.summary_json();
      std::ostringstream os;
      write_histogram_csv(os, ood.histogram, provenance);
      write_text(out_dir / "ood_histogram.csv", os.str());
    }
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    log << "error rate " << fmt(*report.error_rate) << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const std::filesystem::path& config_path, const std::string& axis, const std::vector<std::string>& values,
              const std::filesystem::path& out_dir, std::ostream& log) {
  return guarded(log, [&] {
    if (axis != "w" && axis != "alpha" && axis != "strategy") {
      throw ConfigError("sweep axis must be one of w, alpha, strategy; got '" + axis + "'");
    }
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const ExperimentConfig base = load_experiment_config(config_path);

    std::vector<ExperimentConfig> runs;
    for (const auto& v : values) {
      ExperimentConfig c = base;
      if (axis == "strategy") {
        c.train.strategy = parse_strategy_label(v);
      } else {
        double x = 0.0;
        try {
          std::size_t used = 0;
          x = std::stod(v, &used);
          if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
          throw ConfigError("sweep value '" + v + "' is not a number");
        }
        (axis == "w" ? c.train.strategy.w : c.train.strategy.alpha) = x;
      }
      c.train.validate();
      runs.push_back(std::move(c));
    }

    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    for (const auto& line : base.provenance()) csv << "# " << line << '\n';
    csv << "# axis=" << axis << '\n';
    csv << "value,final_error,final_ece\n" << std::setprecision(17);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const PreparedData data = prepare_data(runs[i]);
      const ExperimentResult result = run_experiment(runs[i], data);
      write_train_artifacts(runs[i], data, result, out_dir / ("run_" + std::to_string(i)));
      csv << values[i] << ',' << *result.test_report.error_rate << ',' << result.test_report.calibration->ece << '\n';
      log << "sweep " << axis << '=' << values[i] << ": error " << fmt(*result.test_report.error_rate) << ", ECE "
          << fmt(result.test_report.calibration->ece) << '\n';
    }
    write_text(out_dir / "sweep.csv", csv.str());
    return kExitOk;
  });
}

int cmd_gradcheck(const std::vector<std::string>& strategies, std::uint64_t seed, double tolerance, std::ostream& log) {
  return guarded(log, [&] {
    if (strategies.empty()) throw ConfigError("gradcheck needs at least one strategy");
    bool all_passed = true;
    for (const auto& label : strategies) {
      const TargetStrategy strategy = parse_strategy_label(label);
      Rng rng(seed, "gradcheck");
      ModelShape shape{6, {8, 5}, 3, strategy.head_mode()};
      const Model model = Model::initialize(shape, rng);
      Batch batch;
      batch.inputs = Matrix(4, 6);
      for (double& v : batch.inputs.data()) v = rng.normal();
      batch.labels = {0, 1, 2, 1};
      batch.onehot = one_hot(batch.labels, 3);
      const GradCheckReport report = gradient_check(model, batch, strategy, tolerance, seed);
      log << strategy.label() << ": max relative error " << report.max_relative_error()
          << (report.passed ? " PASS" : " FAIL") << '\n';
      for (const auto& t : report.tensors) log << "  " << t.name << ' ' << t.max_relative_error << '\n';
      all_passed = all_passed && report.passed;
    }
    return all_passed ? kExitOk : kExitRuntime;
  });
}

}  // namespace pls
