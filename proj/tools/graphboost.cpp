#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "graphboost/commands.hpp"

namespace {

using namespace graphboost;

struct Flags {
  std::string config;
  std::string data;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Override the run seed");
  cmd->add_option("--workers", f.workers, "Candidate training threads");
  cmd->add_flag("-v,--verbose", f.verbose, "Print timings and warnings");
}

RunConfig resolve_config(const Flags& f, bool required) {
  RunConfig c;
  if (!f.config.empty()) c = load_run_config(f.config);
  else if (required) throw ConfigError("--config is required");
  if (!f.data.empty()) c.data = f.data;
  if (!f.model.empty()) c.model_out = f.model;
  if (!f.out.empty()) c.report_out = f.out;
  if (f.seed) c.boost.seed = *f.seed;
  if (f.workers) c.boost.workers = *f.workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boosted graph ensembles over tabular cohorts"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "Fit an ensemble and report test metrics");
  train->add_option("--config", f.config, "Run configuration file")->required();
  train->add_option("--data", f.data, "Labeled CSV (overrides 'data')");
  train->add_option("--model", f.model, "Model output path (overrides 'model')");
  train->add_option("--out", f.out, "Report output path (overrides 'report')");
  add_common(train, f);

  auto* predict = app.add_subcommand("predict", "Write per-row labels and class scores");
  predict->add_option("--model", f.model, "Model file")->required();
  predict->add_option("--data", f.data, "CSV to score")->required();
  predict->add_option("--out", f.out, "Prediction CSV path")->required();
  predict->add_flag("-v,--verbose", f.verbose, "Print a summary");

  auto* evaluate = app.add_subcommand("evaluate", "Score a labeled CSV");
  evaluate->add_option("--model", f.model, "Model file")->required();
  evaluate->add_option("--data", f.data, "Labeled CSV")->required();
  evaluate->add_option("--out", f.out, "Optional JSON report path");
  evaluate->add_flag("-v,--verbose", f.verbose, "Unused; accepted for symmetry");

  auto* sweep = app.add_subcommand("sweep", "Grid search over list-valued config keys");
  sweep->add_option("--config", f.config, "Run configuration file with grids")->required();
  sweep->add_option("--data", f.data, "Labeled CSV (overrides 'data')");
  sweep->add_option("--model", f.model, "Final model output path");
  sweep->add_option("--out", f.out, "Sweep report path");
  add_common(sweep, f);

  SyntheticSpec spec;
  std::optional<std::size_t> rows, features;
  std::optional<int> classes;
  std::optional<double> rho, test_fraction;
  auto* synth = app.add_subcommand("synth", "Write a synthetic train/test CSV pair");
  synth->add_option("--out", f.out, "Output directory")->required();
  synth->add_option("--config", f.config, "Config file supplying synthetic keys");
  synth->add_option("--rows", rows, "Number of rows");
  synth->add_option("--features", features, "Number of feature columns");
  synth->add_option("--classes", classes, "Number of classes");
  synth->add_option("--rho", rho, "Relational strength in [0, 1]");
  synth->add_option("--test-fraction", test_fraction, "Share of rows written to test.csv");
  add_common(synth, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      const auto out = cmd_train(resolve_config(f, true), std::cout, f.verbose);
      if (out.test_report) std::cout << report_to_text(*out.test_report);
    } else if (*predict) {
      const auto p = cmd_predict(f.model, f.data, f.out);
      if (f.verbose) std::cout << "wrote " << p.labels.size() << " predictions to " << f.out << '\n';
    } else if (*evaluate) {
      std::cout << report_to_text(cmd_evaluate(f.model, f.data, f.out));
    } else if (*sweep) {
      const RunConfig c = resolve_config(f, true);
      const auto out = cmd_sweep(c, std::cout, f.verbose);
      std::cout << report_to_text(out.test_report);
    } else if (*synth) {
      Flags copy = f;
      copy.out.clear();
      RunConfig c = resolve_config(copy, false);
      spec = c.synth;
      spec.seed = c.boost.seed;
      if (rows) spec.rows = *rows;
      if (features) spec.features = *features;
      if (classes) spec.classes = *classes;
      if (rho) spec.relational_strength = *rho;
      const auto out = cmd_synth(spec, test_fraction.value_or(c.synth_test_fraction), f.out);
      std::cout << "wrote " << out.train_csv.string() << " and " << out.test_csv.string()
                << "; planted feature " << out.planted_feature << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
