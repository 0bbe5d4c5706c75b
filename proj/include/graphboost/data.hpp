#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphboost/common.hpp"
#include "graphboost/csv.hpp"

namespace graphboost {

enum class ColumnKind : std::uint8_t { numeric = 0, categorical = 1 };

/// One raw column. Numeric cells use NaN as the missing marker; categorical
/// cells use nullopt.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<double> numbers;
  std::vector<std::optional<std::string>> text;

  std::size_t size() const { return kind == ColumnKind::numeric ? numbers.size() : text.size(); }
};

struct RawTable {
  std::vector<Column> columns;
  std::size_t rows = 0;

  const Column* find(std::string_view name) const;
  std::vector<std::string> names() const;
  /// Checks equal column lengths and unique names.
  void validate() const;
};

struct LabeledTable {
  RawTable table;
  /// Empty when no label column was requested or present.
  std::vector<std::optional<std::string>> labels;
};

struct CsvOptions {
  /// Column to split off as labels. Empty means none.
  std::string label_column;
  /// When set, a missing label column is not an error.
  bool label_optional = false;
  std::map<std::string, ColumnKind, std::less<>> hints;
  /// Accept a header-only (or zero-byte) file.
  bool allow_empty = false;
};

/// True for the CSV missing markers: the empty cell and literal "NA".
bool is_missing_cell(std::string_view cell);

LabeledTable load_csv(const std::filesystem::path& path, const CsvOptions& options);
LabeledTable table_from_document(const csv::Document& doc, const CsvOptions& options);
void write_csv(const std::filesystem::path& path, const RawTable& table,
               std::span<const std::string> labels, std::string_view label_column);

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

struct ColumnEncoding {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double impute = 0.0;  // train median (numeric only)
  double mean = 0.0;
  double sd = 0.0;      // sample sd, N-1 denominator; 0 marks a constant column
  std::vector<std::string> categories;  // code = index; "NA" stands for missing

  /// Code assigned to categories never seen in training.
  double unknown_code() const { return static_cast<double>(categories.size()); }
  /// Factor converting a raw-unit distance to encoded units.
  double distance_scale() const {
    return kind == ColumnKind::numeric && sd > 0.0 ? 1.0 / sd : 1.0;
  }
};

struct EncodingMeta {
  std::vector<ColumnEncoding> columns;
  std::string label_name;
  std::vector<std::string> classes;  // sorted; class code = index

  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> feature_index(std::string_view name) const;
  /// Maps text labels to codes; throws DataError for unknown or missing labels.
  std::vector<int> encode_labels(std::span<const std::optional<std::string>> labels) const;
};

struct Dataset {
  Matrix x;
  std::vector<int> y;
  int num_classes = 0;
  std::vector<Split> split;
  EncodingMeta encoder;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
  std::vector<std::size_t> rows_in(Split s) const;
};

/// Sorted distinct label values; the class code of a label is its index.
std::vector<std::string> distinct_labels(std::span<const std::optional<std::string>> labels);

Dataset fit_encoder(const RawTable& table, std::span<const std::optional<std::string>> labels,
                    std::span<const Split> split);
Matrix apply_encoder(const RawTable& table, const EncodingMeta& meta);

using SplitFractions = std::array<double, 3>;

/// Stratified, seeded assignment of rows to train/val/test.
std::vector<Split> split_rows(std::size_t n, const SplitFractions& fractions, std::uint64_t seed,
                              std::span<const int> labels);

struct SyntheticSpec {
  std::size_t rows = 2000;
  std::size_t features = 10;
  int classes = 2;
  double relational_strength = 0.9;
  std::uint64_t seed = 0;
};

struct SyntheticCohort {
  RawTable table;
  std::vector<std::string> labels;
  std::size_t planted_column = 0;
};

/// Cohort whose labels follow the neighbourhood structure of one planted
/// column; the other columns are weakly informative Gaussians.
SyntheticCohort gen_synthetic(const SyntheticSpec& spec);

std::vector<std::optional<std::string>> as_optional(std::span<const std::string> labels);

}  // namespace graphboost
