// plslab: train, evaluate and sweep label-smoothing experiments from a JSON config.

#include <iostream>

#include <CLI11.hpp>

#include "pls/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pairwise label smoothing laboratory"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "out";

  auto* train = app.add_subcommand("train", "Train one model and write checkpoint, run log and reports");
  train->add_option("-c,--config", config, "Experiment config (JSON)")->required();
  train->add_option("-o,--out", out, "Output directory");

  std::string checkpoint;
  pls::EvalFlags flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the config's test split");
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json from a train run")->required();
  eval->add_option("-c,--config", config, "Experiment config providing the dataset and eval blocks")->required();
  eval->add_option("-o,--out", out, "Output directory");
  eval->add_flag("--ece", flags.ece, "Write 15-bin calibration table");
  eval->add_flag("--hist", flags.hist, "Write winning-score histogram");
  eval->add_flag("--temperature", flags.temperature, "Search a logit temperature on the calibration split");
  eval->add_flag("--ood", flags.ood, "Confidence report on the eval.ood dataset");

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "One run per value along an axis; aggregates sweep.csv");
  sweep->add_option("-c,--config", config, "Base experiment config")->required();
  sweep->add_option("--axis", axis, "w, alpha or strategy")->required();
  sweep->add_option("--values", values, "Comma- or space-separated values")->delimiter(',');
  sweep->add_option("-o,--out", out, "Output directory");

  std::vector<std::string> strategies = {"Baseline", "ULS(0.1)", "PLS(0.5)"};
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  gradcheck->add_option("--strategy", strategies, "Strategy labels, e.g. PLS(0.5)")->delimiter(',');
  gradcheck->add_option("--seed", seed, "Seed for the random network");
  gradcheck->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pls::kExitOk : pls::kExitUsage;
  }

  if (train->parsed()) return pls::cmd_train(config, out, std::cerr);
  if (eval->parsed()) return pls::cmd_eval(checkpoint, config, flags, out, std::cerr);
  if (sweep->parsed()) return pls::cmd_sweep(config, axis, values, out, std::cerr);
  return pls::cmd_gradcheck(strategies, seed, tolerance, std::cerr);
}
