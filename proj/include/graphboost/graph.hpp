#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphboost/common.hpp"
#include "graphboost/data.hpp"

namespace graphboost {

/// Pair-difference quantile levels used to derive thresholds per feature.
inline constexpr std::array<double, 3> kQuantileLevels{1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0};
inline constexpr std::size_t kDefaultPairCap = 100000;
inline constexpr std::size_t kDefaultEdgeCap = 50000000;

struct ThresholdSet {
  std::size_t feature = 0;
  std::array<double, 3> gammas{};
};

/// Nearest-rank (lower) quantile: element ceil(p*L) (1-based) of the sorted
/// values. Reorders `values`.
double nearest_rank_quantile(std::vector<double>& values, double p);

/// Thresholds at the 1/16, 1/8 and 1/4 quantiles of pairwise absolute
/// differences. When the number of pairs exceeds `pair_cap`, pair_cap pairs
/// are sampled uniformly using `seed`.
ThresholdSet quantile_thresholds(std::span<const double> values, std::size_t feature = 0,
                                 std::size_t pair_cap = kDefaultPairCap, std::uint64_t seed = 0);

/// Directed edges (both orientations present for an undirected edge).
using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Linear operator Z -> Â Z with Â = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual std::size_t nodes() const = 0;
  /// out = Â in. `out` is resized; it must not alias `in`.
  virtual void multiply(const Matrix& in, Matrix& out) const = 0;
};

/// Normalized adjacency in compressed sparse rows, self-loops included.
class SparseAdjacency final : public Propagator {
 public:
  SparseAdjacency() = default;

  std::size_t nodes() const override { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  void multiply(const Matrix& in, Matrix& out) const override;

  /// Stored entries including self-loops.
  std::size_t nonzeros() const { return cols_.size(); }
  /// Neighbour count of node i, excluding the self-loop.
  std::size_t degree(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i] - 1; }
  /// Stored value or 0 when (i, j) is not an entry.
  double at(std::size_t i, std::size_t j) const;
  Matrix to_dense() const;

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }

  friend SparseAdjacency normalize(const EdgeList& edges, std::size_t n);

 private:
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// Builds the symmetric normalization of a 0/1 edge list. Throws DataError
/// for asymmetric input, self-loops, duplicates, or out-of-range nodes.
SparseAdjacency normalize(const EdgeList& edges, std::size_t n);

/// Threshold graph on one feature: nodes i != j are adjacent iff
/// |v_i - v_j| <= gamma. Stored as sorted order plus per-node windows, so
/// propagation costs O(N K) through prefix sums instead of O(E K).
class IntervalGraph final : public Propagator {
 public:
  IntervalGraph() = default;
  IntervalGraph(std::span<const double> values, double gamma);

  std::size_t nodes() const override { return order_.size(); }
  void multiply(const Matrix& in, Matrix& out) const override;

  double gamma() const { return gamma_; }
  std::size_t edge_count() const { return edge_count_; }
  std::size_t degree(std::size_t i) const;
  /// Undirected edges with i < j, lexicographically sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edge_pairs() const;
  /// CSR form of the same normalized operator.
  SparseAdjacency to_sparse() const;

 private:
  double gamma_ = 0.0;
  std::vector<std::size_t> order_;  // node at each sorted rank
  std::vector<std::size_t> rank_;   // sorted rank of each node
  std::vector<std::size_t> lo_, hi_;  // inclusive window of ranks, per rank
  std::vector<double> scale_;       // 1/sqrt(d_i + 1), per node
  std::size_t edge_count_ = 0;
};

struct CandidateGraph {
  std::size_t feature = 0;
  double gamma = 0.0;
  bool expert = false;
  IntervalGraph graph;

  std::size_t edge_count() const { return graph.edge_count(); }
};

CandidateGraph build_adjacency(std::span<const double> values, double gamma, std::size_t feature = 0);

/// Domain-knowledge graph: feature (name, or column index as digits) and a
/// threshold in raw feature units.
struct ExpertEdge {
  std::string feature;
  double threshold = 0.0;
};

struct CandidateOptions {
  std::size_t pair_cap = kDefaultPairCap;
  std::size_t edge_cap = kDefaultEdgeCap;
  std::uint64_t seed = 0;
};

/// Resolves an expert feature reference against the encoder's columns.
std::size_t resolve_feature(const EncodingMeta& meta, std::string_view feature);

/// 3M quantile candidates (feature ascending, gamma ascending) followed by
/// one candidate per expert edge. Candidates above the edge cap are skipped
/// and reported in `warnings`.
std::vector<CandidateGraph> enumerate_candidates(const Matrix& x, const EncodingMeta& meta,
                                                 std::span<const ExpertEdge> experts,
                                                 const CandidateOptions& options = {},
                                                 std::vector<std::string>* warnings = nullptr);

}  // namespace graphboost
