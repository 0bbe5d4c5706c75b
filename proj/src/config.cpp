#include "graphboost/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace graphboost {
namespace {

constexpr std::string_view kGridKeys[] = {"estimators", "boost_learning_rate", "hidden", "steps",
                                          "teleport", "dropout", "learning_rate", "weight_decay",
                                          "epochs", "patience"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    out.emplace_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void fail(std::string_view where, const std::string& message) {
  throw ConfigError(std::string(where) + ": " + message);
}

double to_double(std::string_view where, std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    fail(where, "'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_count(std::string_view where, std::string_view key, std::string_view v) {
  // Accept integral values written in float notation, e.g. 5e7.
  const double d = to_double(where, key, v);
  if (d < 0.0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
    fail(where, "'" + std::string(key) + "' expects a nonnegative integer, got '" + std::string(v) + "'");
  return static_cast<std::uint64_t>(d);
}

}  // namespace

bool is_grid_key(std::string_view key) {
  return std::find(std::begin(kGridKeys), std::end(kGridKeys), key) != std::end(kGridKeys);
}

ExpertEdge parse_expert(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw ConfigError("expert edge must be 'feature:threshold'");
  ExpertEdge e;
  e.feature = std::string(trim(text.substr(0, colon)));
  e.threshold = to_double("expert", "expert", trim(text.substr(colon + 1)));
  if (e.feature.empty() || !(e.threshold >= 0.0))
    throw ConfigError("expert edge needs a feature and a nonnegative threshold");
  return e;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value, std::string_view where) {
  auto& w = c.boost.weak;
  if (key == "data") c.data = std::string(value);
  else if (key == "label") c.label = std::string(value);
  else if (key == "split") {
    const auto parts = split_list(value);
    if (parts.size() != 3) fail(where, "'split' expects three fractions: train, val, test");
    for (std::size_t s = 0; s < 3; ++s) c.split[s] = to_double(where, key, parts[s]);
  } else if (key == "seed") c.boost.seed = to_count(where, key, value);
  else if (key == "workers") c.boost.workers = to_count(where, key, value);
  else if (key == "model") c.model_out = std::string(value);
  else if (key == "report") c.report_out = std::string(value);
  else if (key == "estimators") c.boost.estimators = to_count(where, key, value);
  else if (key == "boost_learning_rate") c.boost.learning_rate = to_double(where, key, value);
  else if (key == "alpha_rule") {
    if (value == "halved") c.boost.alpha_rule = AlphaRule::halved;
    else if (value == "canonical") c.boost.alpha_rule = AlphaRule::canonical;
    else fail(where, "'alpha_rule' must be 'halved' or 'canonical'");
  } else if (key == "hidden") w.hidden = to_count(where, key, value);
  else if (key == "steps") w.propagation_steps = to_count(where, key, value);
  else if (key == "teleport") w.teleport = to_double(where, key, value);
  else if (key == "dropout") w.dropout = to_double(where, key, value);
  else if (key == "learning_rate") w.learning_rate = to_double(where, key, value);
  else if (key == "weight_decay") w.weight_decay = to_double(where, key, value);
  else if (key == "epochs") w.max_epochs = to_count(where, key, value);
  else if (key == "patience") w.patience = to_count(where, key, value);
  else if (key == "expert") {
    try {
      c.boost.experts.push_back(parse_expert(value));
    } catch (const ConfigError& e) {
      fail(where, e.what());
    }
  } else if (key == "pair_cap") c.boost.pair_cap = to_count(where, key, value);
  else if (key == "edge_cap") c.boost.edge_cap = to_count(where, key, value);
  else if (key == "sweep_cap") c.sweep_cap = to_count(where, key, value);
  else if (key == "rows") c.synth.rows = to_count(where, key, value);
  else if (key == "features") c.synth.features = to_count(where, key, value);
  else if (key == "classes") c.synth.classes = static_cast<int>(to_count(where, key, value));
  else if (key == "relational_strength") c.synth.relational_strength = to_double(where, key, value);
  else if (key == "test_fraction") c.synth_test_fraction = to_double(where, key, value);
  else fail(where, "unknown key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::string_view text, std::string_view source,
                           const std::filesystem::path& base_dir) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(where, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(where, "missing key");
    if (key != "expert") {
      if (std::find(seen.begin(), seen.end(), key) != seen.end())
        fail(where, "duplicate key '" + key + "'");
      seen.push_back(key);
    }

    if (value.starts_with('[')) {
      if (!value.ends_with(']')) fail(where, "unterminated list for '" + key + "'");
      auto items = split_list(value.substr(1, value.size() - 2));
      if (items.empty() || (items.size() == 1 && items[0].empty()))
        fail(where, "empty list for '" + key + "'");
      if (key == "expert") {
        for (const auto& item : items) apply_setting(c, key, item, where);
        continue;
      }
      if (!is_grid_key(key)) fail(where, "'" + key + "' does not accept a list");
      for (const auto& item : items) apply_setting(c, key, item, where);  // validates each
      apply_setting(c, key, items.front(), where);
      c.grids.emplace_back(key, std::move(items));
      continue;
    }
    apply_setting(c, key, value, where);
  }
  if (!c.data.empty() && c.data.is_relative() && !base_dir.empty()) c.data = base_dir / c.data;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.filename().string(), path.parent_path());
}

}  // namespace graphboost
