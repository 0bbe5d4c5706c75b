#include "graphboost/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace graphboost {

double auroc_binary(std::span<const double> scores, const std::vector<bool>& positives) {
  const std::size_t n = scores.size();
  if (positives.size() != n) throw DataError("auroc: scores and labels differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Sum of midranks (1-based) of the positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && scores[order[end]] == scores[order[start]]) ++end;
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t r = start; r < end; ++r)
      if (positives[order[r]]) {
        rank_sum += midrank;
        ++pos;
      }
    start = end;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("auroc undefined: input has a single class");
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

WeightedAuroc weighted_auroc(const Matrix& scores, std::span<const int> y,
                             std::vector<std::string>* warnings) {
  const auto n = static_cast<std::size_t>(scores.rows());
  if (y.size() != n) throw DataError("weighted auroc: scores and labels differ in length");
  const auto k = static_cast<std::size_t>(scores.cols());

  WeightedAuroc out;
  out.per_class.resize(k);
  double weighted = 0.0;
  std::size_t support_total = 0;
  std::vector<double> column(n);
  std::vector<bool> positive(n);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t support = 0;
    for (std::size_t i = 0; i < n; ++i) {
      positive[i] = y[i] == static_cast<int>(c);
      support += positive[i];
      column[i] = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    if (support == 0 || support == n) {
      if (warnings) warnings->push_back("class " + std::to_string(c) + " excluded from AUROC");
      continue;
    }
    const double a = auroc_binary(column, positive);
    out.per_class[c] = a;
    weighted += static_cast<double>(support) * a;
    support_total += support;
  }
  if (support_total == 0) throw DataError("weighted auroc: no class has both positives and negatives");
  out.value = weighted / static_cast<double>(support_total);
  return out;
}

EvalReport evaluate(const Matrix& scores, std::span<const int> predicted, std::span<const int> y,
                    std::vector<std::string> classes) {
  const std::size_t k = classes.size();
  if (static_cast<std::size_t>(scores.cols()) != k) throw DataError("score columns do not match classes");
  EvalReport r;
  const WeightedAuroc auc = weighted_auroc(scores, y);
  r.weighted_auroc = auc.value;
  r.per_class_auroc = auc.per_class;
  r.n = y.size();
  r.classes = std::move(classes);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++r.confusion[y[i]][predicted[i]];
    correct += predicted[i] == y[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  return r;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["weighted_auroc"] = report.weighted_auroc;
  j["accuracy"] = report.accuracy;
  auto per_class = nlohmann::ordered_json::array();
  for (const auto& a : report.per_class_auroc) per_class.push_back(a ? nlohmann::ordered_json(*a) : nullptr);
  j["per_class_auroc"] = per_class;
  j["confusion"] = report.confusion;
  j["n"] = report.n;
  j["classes"] = report.classes;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  EvalReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.weighted_auroc = j.at("weighted_auroc").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& a : j.at("per_class_auroc"))
      r.per_class_auroc.push_back(a.is_null() ? std::nullopt : std::optional<double>(a.get<double>()));
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.n = j.at("n").get<std::size_t>();
    r.classes = j.at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out.precision(6);
  out << "n: " << report.n << '\n';
  out << "weighted_auroc: " << report.weighted_auroc << '\n';
  out << "accuracy: " << report.accuracy << '\n';
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    out << "auroc[" << report.classes[c] << "]: ";
    if (report.per_class_auroc[c])
      out << *report.per_class_auroc[c];
    else
      out << "NA";
    out << '\n';
  }
  for (std::size_t t = 0; t < report.confusion.size(); ++t) {
    out << "confusion[" << report.classes[t] << "]:";
    for (auto c : report.confusion[t]) out << ' ' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace graphboost
