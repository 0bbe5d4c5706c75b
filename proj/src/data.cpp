#include "graphboost/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "graphboost/rng.hpp"

namespace graphboost {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kMissingCategory = "NA";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
    return std::nullopt;
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

bool is_missing_cell(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA";
}

const Column* RawTable::find(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::string> RawTable::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void RawTable::validate() const {
  std::set<std::string_view> seen;
  for (const auto& c : columns) {
    if (c.size() != rows)
      throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) +
                      " values, expected " + std::to_string(rows));
    if (!seen.insert(c.name).second) throw DataError("duplicate column name '" + c.name + "'");
  }
}

LabeledTable table_from_document(const csv::Document& doc, const CsvOptions& options) {
  if (doc.header.empty()) {
    if (options.allow_empty) return {};
    throw DataError("empty table");
  }
  if (doc.rows.empty() && !options.allow_empty) throw DataError("empty table");

  std::optional<std::size_t> label_index;
  if (!options.label_column.empty()) {
    auto it = std::find(doc.header.begin(), doc.header.end(), options.label_column);
    if (it != doc.header.end()) {
      label_index = static_cast<std::size_t>(it - doc.header.begin());
    } else if (!options.label_optional) {
      throw DataError("label column absent: '" + options.label_column + "'");
    }
  }

  LabeledTable out;
  out.table.rows = doc.rows.size();
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    if (label_index && c == *label_index) continue;
    Column col;
    col.name = doc.header[c];

    bool numeric = true;
    if (auto hint = options.hints.find(col.name); hint != options.hints.end()) {
      numeric = hint->second == ColumnKind::numeric;
    } else {
      for (const auto& row : doc.rows) {
        if (!is_missing_cell(row[c]) && !parse_number(row[c])) {
          numeric = false;
          break;
        }
      }
    }

    if (numeric) {
      col.kind = ColumnKind::numeric;
      col.numbers.reserve(doc.rows.size());
      for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& cell = doc.rows[r][c];
        if (is_missing_cell(cell)) {
          col.numbers.push_back(kMissing);
        } else if (auto v = parse_number(cell)) {
          col.numbers.push_back(*v);
        } else {
          throw DataError("column '" + col.name + "' row " + std::to_string(r + 1) +
                          ": expected a number, got '" + cell + "'");
        }
      }
    } else {
      col.kind = ColumnKind::categorical;
      col.text.reserve(doc.rows.size());
      for (const auto& row : doc.rows) {
        if (is_missing_cell(row[c]))
          col.text.emplace_back(std::nullopt);
        else
          col.text.emplace_back(std::string(trim(row[c])));
      }
    }
    out.table.columns.push_back(std::move(col));
  }
  out.table.validate();

  if (label_index) {
    out.labels.reserve(doc.rows.size());
    for (const auto& row : doc.rows) {
      const auto& cell = row[*label_index];
      if (is_missing_cell(cell))
        out.labels.emplace_back(std::nullopt);
      else
        out.labels.emplace_back(std::string(trim(cell)));
    }
  }
  return out;
}

LabeledTable load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  return table_from_document(csv::read_file(path), options);
}

void write_csv(const std::filesystem::path& path, const RawTable& table,
               std::span<const std::string> labels, std::string_view label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  std::vector<std::string> cells = table.names();
  const bool with_labels = !label_column.empty();
  if (with_labels) cells.emplace_back(label_column);
  csv::write_row(out, cells);
  for (std::size_t r = 0; r < table.rows; ++r) {
    cells.clear();
    for (const auto& col : table.columns) {
      if (col.kind == ColumnKind::numeric) {
        cells.push_back(std::isnan(col.numbers[r]) ? std::string("NA") : format_number(col.numbers[r]));
      } else {
        cells.push_back(col.text[r].value_or("NA"));
      }
    }
    if (with_labels) cells.push_back(labels[r]);
    csv::write_row(out, cells);
  }
  if (!out) throw DataError("failed writing file: " + path.string());
}

std::vector<std::string> EncodingMeta::feature_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> EncodingMeta::feature_index(std::string_view name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].name == name) return j;
  return std::nullopt;
}

std::vector<int> EncodingMeta::encode_labels(std::span<const std::optional<std::string>> labels) const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) throw DataError("missing label in row " + std::to_string(i + 1));
    auto it = std::lower_bound(classes.begin(), classes.end(), *labels[i]);
    if (it == classes.end() || *it != *labels[i])
      throw DataError("unknown label '" + *labels[i] + "' in row " + std::to_string(i + 1));
    out.push_back(static_cast<int>(it - classes.begin()));
  }
  return out;
}

std::vector<std::size_t> Dataset::rows_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

std::vector<std::string> distinct_labels(std::span<const std::optional<std::string>> labels) {
  std::set<std::string> distinct;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) throw DataError("missing label in row " + std::to_string(i + 1));
    distinct.insert(*labels[i]);
  }
  return {distinct.begin(), distinct.end()};
}

std::vector<std::optional<std::string>> as_optional(std::span<const std::string> labels) {
  return {labels.begin(), labels.end()};
}

Dataset fit_encoder(const RawTable& table, std::span<const std::optional<std::string>> labels,
                    std::span<const Split> split) {
  table.validate();
  if (labels.empty()) throw DataError("no labels");
  if (labels.size() != table.rows || split.size() != table.rows)
    throw DataError("labels and split must have one entry per row");

  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == Split::train) train.push_back(i);
  if (train.empty()) throw DataError("train split is empty");

  EncodingMeta meta;
  meta.classes = distinct_labels(labels);
  Dataset ds;
  ds.num_classes = static_cast<int>(meta.classes.size());

  for (const auto& col : table.columns) {
    ColumnEncoding enc;
    enc.name = col.name;
    enc.kind = col.kind;
    if (col.kind == ColumnKind::numeric) {
      std::vector<double> present;
      for (std::size_t i : train)
        if (!std::isnan(col.numbers[i])) present.push_back(col.numbers[i]);
      if (present.empty()) throw DataError("all values missing in column '" + col.name + "'");
      enc.impute = median_of(present);
      double sum = 0.0;
      for (std::size_t i : train) sum += std::isnan(col.numbers[i]) ? enc.impute : col.numbers[i];
      enc.mean = sum / static_cast<double>(train.size());
      if (train.size() > 1) {
        double ss = 0.0;
        for (std::size_t i : train) {
          const double d = (std::isnan(col.numbers[i]) ? enc.impute : col.numbers[i]) - enc.mean;
          ss += d * d;
        }
        enc.sd = std::sqrt(ss / static_cast<double>(train.size() - 1));
      }
    } else {
      bool any_present = false;
      for (std::size_t i : train) {
        const std::string key = col.text[i].value_or(std::string(kMissingCategory));
        any_present |= col.text[i].has_value();
        if (std::find(enc.categories.begin(), enc.categories.end(), key) == enc.categories.end())
          enc.categories.push_back(key);
      }
      if (!any_present) throw DataError("all values missing in column '" + col.name + "'");
    }
    meta.columns.push_back(std::move(enc));
  }

  ds.x = apply_encoder(table, meta);
  ds.y = meta.encode_labels(labels);
  std::vector<bool> in_train(meta.classes.size(), false);
  for (std::size_t i : train) in_train[ds.y[i]] = true;
  for (std::size_t k = 0; k < in_train.size(); ++k)
    if (!in_train[k])
      throw DataError("class '" + meta.classes[k] + "' is present only outside the train split");
  ds.split.assign(split.begin(), split.end());
  ds.encoder = std::move(meta);
  return ds;
}

Matrix apply_encoder(const RawTable& table, const EncodingMeta& meta) {
  std::vector<const Column*> source;
  std::string missing;
  for (const auto& enc : meta.columns) {
    const Column* col = table.find(enc.name);
    if (!col) missing += (missing.empty() ? "" : ", ") + enc.name;
    source.push_back(col);
  }
  if (!missing.empty()) throw DataError("missing columns: " + missing);

  Matrix x(static_cast<Eigen::Index>(table.rows), static_cast<Eigen::Index>(meta.columns.size()));
  for (std::size_t j = 0; j < meta.columns.size(); ++j) {
    const auto& enc = meta.columns[j];
    const Column& col = *source[j];
    if (col.kind != enc.kind) throw DataError("column '" + enc.name + "' kind mismatch");
    for (std::size_t i = 0; i < table.rows; ++i) {
      double v;
      if (enc.kind == ColumnKind::numeric) {
        const double raw = std::isnan(col.numbers[i]) ? enc.impute : col.numbers[i];
        v = enc.sd > 0.0 ? (raw - enc.mean) / enc.sd : 0.0;
      } else {
        const std::string key = col.text[i].value_or(std::string(kMissingCategory));
        auto it = std::find(enc.categories.begin(), enc.categories.end(), key);
        v = it == enc.categories.end() ? enc.unknown_code()
                                       : static_cast<double>(it - enc.categories.begin());
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return x;
}

std::vector<Split> split_rows(std::size_t n, const SplitFractions& fractions, std::uint64_t seed,
                              std::span<const int> labels) {
  if (labels.size() != n) throw DataError("split_rows: one label per row required");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  if (fractions[0] <= 0.0) throw ConfigError("train fraction must be positive");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

  const std::size_t required = static_cast<std::size_t>(
      std::count_if(fractions.begin(), fractions.end(), [](double f) { return f > 0.0; }));
  for (const auto& [label, rows] : by_class)
    if (rows.size() < required)
      throw DataError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                      " rows, fewer than the " + std::to_string(required) + " splits requiring it");

  // Global targets by largest remainder.
  auto apportion = [&](std::size_t count) {
    std::array<std::size_t, 3> whole{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = fractions[s] * static_cast<double>(count);
      whole[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      rem[s] = exact - static_cast<double>(whole[s]);
      used += whole[s];
    }
    return std::tuple{whole, rem, count - std::min(count, used)};
  };
  auto [target, target_rem, target_left] = apportion(n);
  for (; target_left > 0; --target_left) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (target_rem[s] > target_rem[best]) best = s;
    ++target[best];
    target_rem[best] = -1.0;
  }

  // Per-class floors; leftovers go one per split to the splits with the most
  // outstanding global demand, so class counts stay within 1 of exact.
  std::map<int, std::array<std::size_t, 3>> counts;
  std::array<long, 3> need{};
  for (int s = 0; s < 3; ++s) need[s] = static_cast<long>(target[s]);
  for (const auto& [label, rows] : by_class) {
    auto [whole, rem, left] = apportion(rows.size());
    counts[label] = whole;
    for (int s = 0; s < 3; ++s) need[s] -= static_cast<long>(whole[s]);
  }
  for (const auto& [label, rows] : by_class) {
    auto [whole, rem, left] = apportion(rows.size());
    std::array<bool, 3> taken{};
    for (std::size_t u = 0; u < left; ++u) {
      int best = -1;
      for (int s = 0; s < 3; ++s) {
        if (taken[s] || fractions[s] <= 0.0) continue;
        if (best < 0 || need[s] > need[best] || (need[s] == need[best] && rem[s] > rem[best])) best = s;
      }
      if (best < 0) break;
      taken[best] = true;
      ++counts[label][best];
      --need[best];
    }
  }

  std::vector<Split> out(n, Split::train);
  Rng rng(seed, "split");
  for (auto& [label, rows] : by_class) {
    rng.shuffle(std::span<std::size_t>(rows));
    const auto& c = counts[label];
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < c[s]; ++k) out[rows[pos++]] = static_cast<Split>(s);
  }
  return out;
}

SyntheticCohort gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic cohort needs at least 2 classes");
  if (spec.rows < 10 * static_cast<std::size_t>(spec.classes))
    throw ConfigError("synthetic cohort needs n >= 10k rows");
  if (spec.features < 3) throw ConfigError("synthetic cohort needs m >= 3 features");
  if (!(spec.relational_strength >= 0.0 && spec.relational_strength <= 1.0))
    throw ConfigError("relational strength must be in [0, 1]");

  const std::size_t n = spec.rows;
  const auto k = static_cast<std::uint64_t>(spec.classes);
  Rng rng(spec.seed, "synth");

  SyntheticCohort out;
  out.planted_column = rng.below(spec.features);

  std::vector<double> edge(n);
  for (auto& e : edge) e = rng.uniform();
  // Latent labels; observed labels are their neighbourhood majority.
  std::vector<int> latent(n);
  for (auto& b : latent) b = static_cast<int>(rng.below(k));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return edge[a] < edge[b]; });

  const std::size_t window = (n + 19) / 20;
  std::vector<int> label(n);
  std::vector<std::size_t> votes(k);
  for (std::size_t r = 0; r < n; ++r) {
    // Grow outward from rank r taking the nearer side each step.
    std::fill(votes.begin(), votes.end(), 0);
    std::size_t lo = r, hi = r;  // inclusive
    ++votes[latent[order[r]]];
    for (std::size_t taken = 1; taken < window; ++taken) {
      const bool can_lo = lo > 0, can_hi = hi + 1 < n;
      bool go_lo;
      if (can_lo && can_hi)
        go_lo = edge[order[r]] - edge[order[lo - 1]] <= edge[order[hi + 1]] - edge[order[r]];
      else
        go_lo = can_lo;
      const std::size_t next = go_lo ? --lo : ++hi;
      ++votes[latent[order[next]]];
    }
    const auto majority = std::max_element(votes.begin(), votes.end()) - votes.begin();
    label[order[r]] = static_cast<int>(majority);
  }
  // Gaussians track the neighbourhood label; observed labels are replaced
  // by uniform noise with probability 1 - rho.
  const std::vector<int> structured = label;
  for (std::size_t i = 0; i < n; ++i)
    if (!rng.bernoulli(spec.relational_strength)) label[i] = static_cast<int>(rng.below(k));

  out.table.rows = n;
  for (std::size_t j = 0; j < spec.features; ++j) {
    Column col;
    col.name = "x" + std::to_string(j);
    col.kind = ColumnKind::numeric;
    col.numbers.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      col.numbers[i] = j == out.planted_column ? edge[i] : 0.5 * structured[i] + rng.normal();
    out.table.columns.push_back(std::move(col));
  }

  const std::size_t width = std::to_string(k - 1).size();
  out.labels.reserve(n);
  for (int y : label) {
    std::string digits = std::to_string(y);
    out.labels.push_back("c" + std::string(width - digits.size(), '0') + digits);
  }
  return out;
}

}  // namespace graphboost
