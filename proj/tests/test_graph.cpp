#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "graphboost/graph.hpp"
#include "graphboost/rng.hpp"

using namespace graphboost;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

Pairs brute_force_edges(std::span<const double> v, double gamma) {
  Pairs out;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (std::abs(v[i] - v[j]) <= gamma) out.emplace_back(i, j);
  return out;
}

EdgeList directed(const Pairs& pairs) {
  EdgeList out;
  for (auto [i, j] : pairs) {
    out.emplace_back(i, j);
    out.emplace_back(j, i);
  }
  return out;
}

// Dense (D+I)^{-1/2}(A+I)(D+I)^{-1/2} straight from the definition.
Matrix dense_normalized(const Pairs& pairs, std::size_t n) {
  Matrix a = Matrix::Identity(n, n);
  for (auto [i, j] : pairs) a(i, j) = a(j, i) = 1.0;
  const Vector d = a.rowwise().sum();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(d(i) * d(j));
  return a;
}

std::vector<double> random_values(Rng& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? std::round(rng.uniform() * 10.0) / 2.0 : rng.normal();
  return v;
}

Matrix apply(const Propagator& p, const Matrix& in) {
  Matrix out;
  p.multiply(in, out);
  return out;
}

}  // namespace

TEST(Quantiles, NearestRankLower) {
  std::vector<double> v{3, 1, 2, 2, 1, 1};
  EXPECT_EQ(nearest_rank_quantile(v, 1.0 / 16.0), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.5), 1.0);
  EXPECT_EQ(nearest_rank_quantile(v, 0.51), 2.0);
  EXPECT_EQ(nearest_rank_quantile(v, 1.0), 3.0);
}

TEST(Quantiles, ConstantFeature) {
  const std::vector<double> v{0, 0, 0, 0};
  const auto t = quantile_thresholds(v);
  EXPECT_EQ(t.gammas, (std::array<double, 3>{0, 0, 0}));
}

TEST(Quantiles, FourValues) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(quantile_thresholds(v).gammas, (std::array<double, 3>{1, 1, 1}));
}

TEST(Quantiles, TwoValues) {
  const std::vector<double> v{0, 10};
  EXPECT_EQ(quantile_thresholds(v).gammas, (std::array<double, 3>{10, 10, 10}));
}

TEST(Quantiles, Errors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(quantile_thresholds(one), DataError);
  const std::vector<double> inf{1.0, INFINITY};
  EXPECT_THROW(quantile_thresholds(inf), DataError);
}

TEST(Quantiles, MatchesBruteForceAndNondecreasing) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto v = random_values(rng, 2 + rng.below(60), trial % 2);
    std::vector<double> diffs;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) diffs.push_back(std::abs(v[i] - v[j]));
    std::sort(diffs.begin(), diffs.end());
    const auto t = quantile_thresholds(v, 4);
    EXPECT_EQ(t.feature, 4u);
    for (std::size_t q = 0; q < 3; ++q) {
      const auto rank = static_cast<std::size_t>(std::ceil(kQuantileLevels[q] * diffs.size()));
      EXPECT_EQ(t.gammas[q], diffs[std::max<std::size_t>(rank, 1) - 1]);
      EXPECT_GE(t.gammas[q], 0.0);
    }
    EXPECT_LE(t.gammas[0], t.gammas[1]);
    EXPECT_LE(t.gammas[1], t.gammas[2]);
  }
}

TEST(Quantiles, SampledPairsAreDeterministicAndClose) {
  Rng rng(5);
  std::vector<double> v(3000);
  for (auto& x : v) x = rng.uniform();
  const auto a = quantile_thresholds(v, 0, 20000, 99);
  const auto b = quantile_thresholds(v, 0, 20000, 99);
  EXPECT_EQ(a.gammas, b.gammas);
  // Uniform(0,1) differences: P(|d| <= g) = 2g - g^2.
  for (std::size_t q = 0; q < 3; ++q) {
    const double p = kQuantileLevels[q];
    EXPECT_NEAR(a.gammas[q], 1.0 - std::sqrt(1.0 - p), 0.01);
  }
}

TEST(BuildAdjacency, Examples) {
  const std::vector<double> v{1.0, 2.0, 5.0};
  EXPECT_EQ(build_adjacency(v, 1.5).graph.edge_pairs(), (Pairs{{0, 1}}));

  const std::vector<double> distinct{0.3, 1.7, -2.0, 4.0};
  const auto empty = build_adjacency(distinct, 0.0);
  EXPECT_EQ(empty.edge_count(), 0u);
  EXPECT_EQ(empty.graph.to_sparse().to_dense(), Matrix::Identity(4, 4));

  const std::vector<double> same{0, 0, 0};
  EXPECT_EQ(build_adjacency(same, 0.0).graph.edge_pairs(), (Pairs{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(BuildAdjacency, MatchesBruteForceAndIsMonotone) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_values(rng, 1 + rng.below(200), trial % 3 == 0);
    const double g1 = rng.uniform() * 1.5, g2 = g1 + rng.uniform();
    const auto e1 = IntervalGraph(v, g1).edge_pairs();
    const auto e2 = IntervalGraph(v, g2).edge_pairs();
    ASSERT_EQ(e1, brute_force_edges(v, g1));
    ASSERT_EQ(e2, brute_force_edges(v, g2));
    EXPECT_TRUE(std::includes(e2.begin(), e2.end(), e1.begin(), e1.end()));
  }
}

TEST(BuildAdjacency, MaxDifferenceGivesCompleteGraph) {
  Rng rng(10);
  const auto v = random_values(rng, 40, false);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  EXPECT_EQ(IntervalGraph(v, *hi - *lo).edge_count(), 40u * 39u / 2u);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize({}, 2).to_dense(), Matrix::Identity(2, 2));
  const Matrix pair = normalize({{0, 1}, {1, 0}}, 2).to_dense();
  EXPECT_EQ(pair, Matrix::Constant(2, 2, 0.5));

  const auto path = normalize({{0, 1}, {1, 0}, {1, 2}, {2, 1}}, 3);
  EXPECT_DOUBLE_EQ(path.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(path.at(0, 1), 1.0 / std::sqrt(6.0));
  EXPECT_DOUBLE_EQ(path.at(1, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(path.at(1, 2), 1.0 / std::sqrt(6.0));
  EXPECT_DOUBLE_EQ(path.at(2, 2), 0.5);
  EXPECT_EQ(path.at(0, 2), 0.0);
  EXPECT_EQ(path.degree(1), 2u);
  EXPECT_EQ(path.nonzeros(), 7u);
}

TEST(Normalize, RejectsMalformedEdgeLists) {
  EXPECT_THROW(normalize({{0, 1}}, 2), DataError);
  EXPECT_THROW(normalize({{1, 1}}, 2), DataError);
  EXPECT_THROW(normalize({{0, 1}, {1, 0}, {0, 1}, {1, 0}}, 2), DataError);
  EXPECT_THROW(normalize({{0, 5}, {5, 0}}, 2), DataError);
}

TEST(Normalize, MatchesDenseDefinitionSymmetricAndEigenRelation) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto v = random_values(rng, 1 + rng.below(120), trial % 2);
    const double gamma = rng.uniform();
    const auto pairs = brute_force_edges(v, gamma);
    const auto a = normalize(directed(pairs), v.size());
    const Matrix dense = a.to_dense();
    EXPECT_LE((dense - dense_normalized(pairs, v.size())).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(dense, dense.transpose());

    Vector s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s(i) = std::sqrt(a.degree(i) + 1.0);
    EXPECT_LE((dense * s - s).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Normalize, SpectralRadiusAtMostOne) {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = random_values(rng, 30, true);
    const Matrix dense = IntervalGraph(v, 0.6).to_sparse().to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense);
    EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(IntervalGraph, PropagationMatchesSparseForm) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_values(rng, 1 + rng.below(150), trial % 2);
    const IntervalGraph g(v, rng.uniform());
    const SparseAdjacency s = g.to_sparse();
    Matrix z(static_cast<Eigen::Index>(v.size()), 3);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    EXPECT_LE((apply(g, z) - apply(s, z)).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(g.degree(i), s.degree(i));
  }
}

TEST(Candidates, ThreePerFeature) {
  Matrix x(5, 2);
  x << 0, 1, 1, 1, 2, 1, 3, 1, 4, 1;
  EncodingMeta meta;
  meta.columns.resize(2);
  meta.columns[0].name = "a";
  meta.columns[1].name = "b";
  const auto c = enumerate_candidates(x, meta, {});
  ASSERT_EQ(c.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(c[i].feature, i / 3);
    EXPECT_FALSE(c[i].expert);
    if (i % 3) EXPECT_LE(c[i - 1].gamma, c[i].gamma);
  }
  // Constant feature: three identical complete graphs.
  for (std::size_t i = 3; i < 6; ++i) EXPECT_EQ(c[i].edge_count(), 10u);
}

TEST(Candidates, ExpertThresholdScalesWithTheFeature) {
  Rng rng(31);
  const std::size_t n = 120, m = 78;
  RawTable table;
  table.rows = n;
  for (std::size_t j = 0; j < m; ++j) {
    Column c;
    c.name = j == 40 ? "age" : "f" + std::to_string(j);
    for (std::size_t i = 0; i < n; ++i) c.numbers.push_back(j == 40 ? 40.0 + 30.0 * rng.uniform() : rng.normal());
    table.columns.push_back(c);
  }
  std::vector<std::optional<std::string>> labels(n, "a");
  labels[0] = "b";
  const Dataset ds = fit_encoder(table, labels, std::vector<Split>(n, Split::train));
  const std::vector<ExpertEdge> experts{{"age", 5.0}};
  const auto c = enumerate_candidates(ds.x, ds.encoder, experts);
  ASSERT_EQ(c.size(), 235u);
  const auto& last = c.back();
  EXPECT_TRUE(last.expert);
  EXPECT_EQ(last.feature, 40u);
  EXPECT_DOUBLE_EQ(last.gamma, 5.0 / ds.encoder.columns[40].sd);
  EXPECT_EQ(last.graph.edge_pairs(), brute_force_edges(table.columns[40].numbers, 5.0));
}

TEST(Candidates, ExpertByIndexAndUnknownName) {
  Matrix x(4, 2);
  x << 0, 1, 1, 2, 2, 3, 3, 5;
  EncodingMeta meta;
  meta.columns.resize(2);
  meta.columns[0].name = "a";
  meta.columns[1].name = "b";
  EXPECT_EQ(resolve_feature(meta, "b"), 1u);
  EXPECT_EQ(resolve_feature(meta, "1"), 1u);
  EXPECT_THROW(resolve_feature(meta, "c"), DataError);
  const std::vector<ExpertEdge> bad{{"age", 5.0}};
  EXPECT_THROW(enumerate_candidates(x, meta, bad), DataError);
}

TEST(Candidates, EdgeCapSkipsWithWarning) {
  Matrix x(6, 1);
  x << 0, 0, 0, 0, 0, 1;
  EncodingMeta meta;
  meta.columns.resize(1);
  meta.columns[0].name = "a";
  std::vector<std::string> warnings;
  const auto c = enumerate_candidates(x, meta, {}, {kDefaultPairCap, 5, 0}, &warnings);
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(warnings.size(), 3u);
}
