#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphboost/common.hpp"

namespace graphboost {

/// Mann-Whitney AUROC with midrank ties. Throws DataError unless both
/// classes are present.
double auroc_binary(std::span<const double> scores, const std::vector<bool>& positives);

struct WeightedAuroc {
  double value = 0.0;
  /// Unset for classes without both positives and negatives.
  std::vector<std::optional<double>> per_class;
};

/// One-vs-rest AUROC averaged with class-support weights over the classes
/// that have both positives and negatives.
WeightedAuroc weighted_auroc(const Matrix& scores, std::span<const int> y,
                             std::vector<std::string>* warnings = nullptr);

struct EvalReport {
  double weighted_auroc = 0.0;
  std::vector<std::optional<double>> per_class_auroc;
  double accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t n = 0;
  std::vector<std::string> classes;

  bool operator==(const EvalReport&) const = default;
};

EvalReport evaluate(const Matrix& scores, std::span<const int> predicted, std::span<const int> y,
                    std::vector<std::string> classes);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
/// Flat "key: value" block for terminals and logs.
std::string report_to_text(const EvalReport& report);

}  // namespace graphboost
