#include "graphboost/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "graphboost/rng.hpp"

namespace graphboost {

double nearest_rank_quantile(std::vector<double>& values, double p) {
  if (values.empty()) throw DataError("quantile of an empty set");
  const auto count = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * count));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

ThresholdSet quantile_thresholds(std::span<const double> values, std::size_t feature,
                                 std::size_t pair_cap, std::uint64_t seed) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("thresholds need at least 2 values");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("thresholds need finite values");

  std::vector<double> diffs;
  const std::size_t pairs = n * (n - 1) / 2;
  if (pairs <= pair_cap) {
    diffs.reserve(pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) diffs.push_back(std::abs(values[i] - values[j]));
  } else {
    Rng rng(seed, "sampling", feature);
    diffs.reserve(pair_cap);
    for (std::size_t s = 0; s < pair_cap; ++s) {
      const std::size_t i = rng.below(n);
      std::size_t j = rng.below(n - 1);
      if (j >= i) ++j;
      diffs.push_back(std::abs(values[i] - values[j]));
    }
  }

  ThresholdSet out;
  out.feature = feature;
  for (std::size_t q = 0; q < kQuantileLevels.size(); ++q)
    out.gammas[q] = nearest_rank_quantile(diffs, kQuantileLevels[q]);
  return out;
}

SparseAdjacency normalize(const EdgeList& edges, std::size_t n) {
  EdgeList sorted = edges;
  for (auto [i, j] : sorted) {
    if (i >= n || j >= n) throw DataError("edge endpoint out of range");
    if (i == j) throw DataError("self-loop in edge list");
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DataError("duplicate edge in edge list");
  for (auto [i, j] : sorted)
    if (!std::binary_search(sorted.begin(), sorted.end(), std::pair{j, i}))
      throw DataError("asymmetric edge list: (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") has no reverse");

  std::vector<std::size_t> degree(n, 0);
  for (auto [i, j] : sorted) ++degree[i];

  SparseAdjacency a;
  a.row_ptr_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) a.row_ptr_[i + 1] = a.row_ptr_[i] + degree[i] + 1;
  a.cols_.resize(a.row_ptr_[n]);
  a.values_.resize(a.row_ptr_[n]);

  auto value = [&](std::size_t i, std::size_t j) {
    return 1.0 / std::sqrt(static_cast<double>(degree[i] + 1) * static_cast<double>(degree[j] + 1));
  };
  std::size_t e = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos = a.row_ptr_[i];
    bool self_done = false;
    for (; e < sorted.size() && sorted[e].first == i; ++e) {
      const std::size_t j = sorted[e].second;
      if (!self_done && j > i) {
        a.cols_[pos] = i;
        a.values_[pos++] = value(i, i);
        self_done = true;
      }
      a.cols_[pos] = j;
      a.values_[pos++] = value(i, j);
    }
    if (!self_done) {
      a.cols_[pos] = i;
      a.values_[pos++] = value(i, i);
    }
  }
  return a;
}

void SparseAdjacency::multiply(const Matrix& in, Matrix& out) const {
  const std::size_t n = nodes();
  out.setZero(static_cast<Eigen::Index>(n), in.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(static_cast<Eigen::Index>(i));
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      row.noalias() += values_[p] * in.row(static_cast<Eigen::Index>(cols_[p]));
  }
}

double SparseAdjacency::at(std::size_t i, std::size_t j) const {
  auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(first, last, j);
  return it != last && *it == j ? values_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
}

Matrix SparseAdjacency::to_dense() const {
  const auto n = static_cast<Eigen::Index>(nodes());
  Matrix d = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < nodes(); ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols_[p])) = values_[p];
  return d;
}

IntervalGraph::IntervalGraph(std::span<const double> values, double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0)) throw DataError("graph threshold must be nonnegative");
  const std::size_t n = values.size();
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("graph feature values must be finite");

  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r) rank_[order_[r]] = r;

  // Both window ends move monotonically with the rank. Differences are taken
  // larger-minus-smaller, which equals |v_i - v_j| exactly in floating point.
  lo_.resize(n);
  hi_.resize(n);
  std::size_t lo = 0, hi = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = values[order_[r]];
    while (v - values[order_[lo]] > gamma) ++lo;
    hi = std::max(hi, r);
    while (hi + 1 < n && values[order_[hi + 1]] - v <= gamma) ++hi;
    lo_[r] = lo;
    hi_[r] = hi;
  }

  scale_.resize(n);
  std::size_t twice_edges = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t window = hi_[r] - lo_[r] + 1;  // neighbours plus self
    twice_edges += window - 1;
    scale_[order_[r]] = 1.0 / std::sqrt(static_cast<double>(window));
  }
  edge_count_ = twice_edges / 2;
}

std::size_t IntervalGraph::degree(std::size_t i) const {
  const std::size_t r = rank_[i];
  return hi_[r] - lo_[r];
}

void IntervalGraph::multiply(const Matrix& in, Matrix& out) const {
  const std::size_t n = nodes();
  const Eigen::Index k = in.cols();
  Matrix prefix(static_cast<Eigen::Index>(n + 1), k);
  prefix.row(0).setZero();
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t node = order_[r];
    prefix.row(static_cast<Eigen::Index>(r + 1)) =
        prefix.row(static_cast<Eigen::Index>(r)) + scale_[node] * in.row(static_cast<Eigen::Index>(node));
  }
  out.resize(static_cast<Eigen::Index>(n), k);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t node = order_[r];
    out.row(static_cast<Eigen::Index>(node)) =
        scale_[node] * (prefix.row(static_cast<Eigen::Index>(hi_[r] + 1)) -
                        prefix.row(static_cast<Eigen::Index>(lo_[r])));
  }
}

std::vector<std::pair<std::size_t, std::size_t>> IntervalGraph::edge_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edge_count_);
  for (std::size_t r = 0; r < nodes(); ++r) {
    const std::size_t i = order_[r];
    for (std::size_t s = r + 1; s <= hi_[r]; ++s) {
      const std::size_t j = order_[s];
      out.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SparseAdjacency IntervalGraph::to_sparse() const {
  EdgeList directed;
  directed.reserve(2 * edge_count_);
  for (auto [i, j] : edge_pairs()) {
    directed.emplace_back(i, j);
    directed.emplace_back(j, i);
  }
  return normalize(directed, nodes());
}

CandidateGraph build_adjacency(std::span<const double> values, double gamma, std::size_t feature) {
  CandidateGraph c;
  c.feature = feature;
  c.gamma = gamma;
  c.graph = IntervalGraph(values, gamma);
  return c;
}

std::size_t resolve_feature(const EncodingMeta& meta, std::string_view feature) {
  if (auto j = meta.feature_index(feature)) return *j;
  std::size_t index = 0;
  auto [ptr, ec] = std::from_chars(feature.data(), feature.data() + feature.size(), index);
  if (ec == std::errc() && ptr == feature.data() + feature.size() && index < meta.columns.size())
    return index;
  throw DataError("expert feature not found: '" + std::string(feature) + "'");
}

std::vector<CandidateGraph> enumerate_candidates(const Matrix& x, const EncodingMeta& meta,
                                                 std::span<const ExpertEdge> experts,
                                                 const CandidateOptions& options,
                                                 std::vector<std::string>* warnings) {
  const auto m = static_cast<std::size_t>(x.cols());
  if (m == 0) throw DataError("no features to build graphs from");
  if (meta.columns.size() != m) throw DataError("encoder does not match feature matrix");

  std::vector<CandidateGraph> out;
  auto admit = [&](CandidateGraph c) {
    if (c.edge_count() > options.edge_cap) {
      if (warnings)
        warnings->push_back("skipping candidate on feature '" + meta.columns[c.feature].name +
                            "' (gamma " + std::to_string(c.gamma) + "): " +
                            std::to_string(c.edge_count()) + " edges exceed cap");
      return;
    }
    out.push_back(std::move(c));
  };

  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < column.size(); ++i) column[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const ThresholdSet t = quantile_thresholds(column, j, options.pair_cap, options.seed);
    for (double gamma : t.gammas) admit(build_adjacency(column, gamma, j));
  }
  for (const auto& spec : experts) {
    const std::size_t j = resolve_feature(meta, spec.feature);
    if (!(spec.threshold >= 0.0)) throw ConfigError("expert threshold must be nonnegative");
    for (std::size_t i = 0; i < column.size(); ++i) column[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    CandidateGraph c = build_adjacency(column, spec.threshold * meta.columns[j].distance_scale(), j);
    c.expert = true;
    admit(std::move(c));
  }
  return out;
}

}  // namespace graphboost
