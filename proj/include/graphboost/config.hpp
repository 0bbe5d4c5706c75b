#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "graphboost/boost.hpp"
#include "graphboost/data.hpp"

namespace graphboost {

/// Run configuration read from a flat `key = value` file. Lines starting
/// with '#' are comments. Grid keys accept `[a, b, ...]` lists (sweep only).
struct RunConfig {
  std::filesystem::path data;
  std::string label = "label";
  SplitFractions split{0.6, 0.2, 0.2};
  BoostConfig boost;
  std::filesystem::path model_out = "model.gbm";
  std::filesystem::path report_out = "report.json";
  /// Grid values by key, in file order of first appearance.
  std::vector<std::pair<std::string, std::vector<std::string>>> grids;
  std::size_t sweep_cap = 64;

  SyntheticSpec synth;
  double synth_test_fraction = 0.2;
};

/// Keys that may carry grids.
bool is_grid_key(std::string_view key);

RunConfig parse_run_config(std::string_view text, std::string_view source = "config",
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Sets one scalar key; throws ConfigError with `where` as the location prefix.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value,
                   std::string_view where = "config");

ExpertEdge parse_expert(std::string_view text);

}  // namespace graphboost
