#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "graphboost/boost.hpp"
#include "graphboost/config.hpp"
#include "graphboost/metrics.hpp"

namespace graphboost {

/// Loads the labeled CSV named by `config`, splits it with the config seed
/// and encodes it with statistics from the train rows.
Dataset prepare_dataset(const RunConfig& config);

struct TrainOutcome {
  Ensemble ensemble;
  FitSummary summary;
  Dataset dataset;
  /// Unset when the split leaves no test rows.
  std::optional<EvalReport> test_report;
};

/// Fits on the config's data, evaluates on the test rows, writes the model
/// to `config.model_out` and the report to `config.report_out`. Round logs
/// go to `log`.
TrainOutcome cmd_train(const RunConfig& config, std::ostream& log, bool verbose = false);

/// Writes `row,label,score_<class>...` for every row of `data_path`.
EnsemblePrediction cmd_predict(const std::filesystem::path& model_path,
                               const std::filesystem::path& data_path,
                               const std::filesystem::path& out_path);

/// Scores a labeled CSV; writes the JSON report when `report_path` is set.
EvalReport cmd_evaluate(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                        const std::filesystem::path& report_path = {});

using Setting = std::pair<std::string, std::string>;

struct SweepPoint {
  std::vector<Setting> settings;
  double val_weighted_auroc = 0.0;
  std::size_t rounds = 0;
};

struct SweepOutcome {
  std::vector<SweepPoint> points;
  std::size_t best = 0;
  Ensemble final_model;
  EvalReport test_report;
};

/// Distinct grid points in lexicographic order, first grid key outermost.
/// Throws ConfigError when the full product exceeds `config.sweep_cap`.
std::vector<std::vector<Setting>> grid_points(const RunConfig& config);

/// Fits every grid point, picks the best by validation weighted AUROC
/// (earliest point on ties), refits it on train and validation rows and
/// evaluates the test rows once.
SweepOutcome cmd_sweep(const RunConfig& config, std::ostream& log, bool verbose = false);

struct SynthOutcome {
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::string planted_feature;
};

/// Writes train.csv and test.csv (label column "label") into `out_dir`.
SynthOutcome cmd_synth(const SyntheticSpec& spec, double test_fraction, const std::filesystem::path& out_dir);

}  // namespace graphboost
