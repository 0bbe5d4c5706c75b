#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "graphboost/boost.hpp"
#include "graphboost/metrics.hpp"
#include "oracles.hpp"

using namespace graphboost;

namespace {

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

// Round whose learner always outputs `label`.
WeakRound constant_round(std::size_t inputs, int classes, int label, double alpha_t) {
  AppnpConfig c;
  c.hidden = 1;
  c.teleport = 1.0;
  WeakRound r;
  r.model = AppnpModel::initialize(c, inputs, static_cast<std::size_t>(classes));
  r.model.w1.setZero();
  r.model.w2.setZero();
  r.model.b2(label) = 1.0;
  r.alpha = alpha_t;
  return r;
}

Dataset synthetic_dataset(std::size_t n, int k, double rho, std::uint64_t seed) {
  const auto cohort = gen_synthetic({n, 6, k, rho, seed});
  const auto labels = as_optional(cohort.labels);
  EncodingMeta probe;
  probe.classes = distinct_labels(labels);
  const auto split = split_rows(n, {0.6, 0.2, 0.2}, seed, probe.encode_labels(labels));
  Dataset ds = fit_encoder(cohort.table, labels, split);
  ds.encoder.label_name = "label";
  return ds;
}

BoostConfig quick_config(std::size_t rounds, std::uint64_t seed) {
  BoostConfig c;
  c.estimators = rounds;
  c.seed = seed;
  c.weak.hidden = 8;
  c.weak.max_epochs = 30;
  c.weak.patience = 0;
  c.weak.learning_rate = 0.02;
  return c;
}

}  // namespace

TEST(WeightedError, Examples) {
  const std::vector<int> y{0, 1, 1, 0};
  const std::vector<double> w(4, 0.25);
  EXPECT_EQ(weighted_error(y, y, w, iota_rows(4)), 0.0);
  const std::vector<int> one_wrong{0, 1, 0, 0};
  EXPECT_EQ(weighted_error(one_wrong, y, w, iota_rows(4)), 0.25);
}

TEST(WeightedError, MatchesPerRowSum) {
  Rng rng(1);
  std::vector<int> p(50), y(50);
  std::vector<double> w(50);
  double total = 0.0;
  for (int i = 0; i < 50; ++i) {
    p[i] = static_cast<int>(rng.below(3));
    y[i] = static_cast<int>(rng.below(3));
    w[i] = rng.uniform();
    total += w[i];
  }
  for (auto& v : w) v /= total;
  double expected = 0.0;
  for (int i = 0; i < 50; ++i) expected += p[i] != y[i] ? w[i] : 0.0;
  EXPECT_EQ(weighted_error(p, y, w, iota_rows(50)), expected);
}

TEST(Alpha, Examples) {
  EXPECT_EQ(alpha(0.5, 2, 1.0), 0.0);
  EXPECT_NEAR(alpha(0.5, 3, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(alpha(0.1, 2, 0.5), 0.5 * 0.5 * std::log(9.0), 1e-15);
  EXPECT_NEAR(alpha(0.1, 2, 0.5), 0.5493, 5e-5);
  EXPECT_NEAR(alpha(0.1, 2, 1.0, AlphaRule::canonical), std::log(9.0), 1e-15);
  EXPECT_TRUE(std::isfinite(alpha(0.0, 2, 1.0)));
  EXPECT_TRUE(std::isfinite(alpha(1.0, 4, 1.0)));
}

TEST(Alpha, PositiveBelowChance) {
  for (int k = 2; k <= 6; ++k) {
    const double chance = (k - 1.0) / k;
    for (int s = 1; s < 200; ++s) {
      const double err = chance * s / 200.0;
      EXPECT_GT(alpha(err, k, 1.0), 0.0) << "k=" << k << " err=" << err;
    }
  }
  EXPECT_LT(alpha(0.6, 2, 1.0), 0.0);
}

TEST(UpdateWeights, Examples) {
  const std::vector<double> w{0.5, 0.5};
  const std::vector<int> y{0, 0}, p{0, 1};
  const auto out = update_weights(w, p, y, std::log(2.0), iota_rows(2));
  EXPECT_NEAR(out[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(out[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(update_weights(w, y, y, 1.3, iota_rows(2)), w);
  EXPECT_EQ(update_weights(w, p, y, 0.0, iota_rows(2)), w);
}

TEST(UpdateWeights, OnlyMaskedRowsChange) {
  const std::vector<double> w{0.5, 0.5, 0.0};
  const std::vector<int> y{0, 0, 1}, p{1, 0, 0};
  const std::vector<std::size_t> rows{0, 1};
  const auto out = update_weights(w, p, y, 1.0, rows);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_NEAR(out[0] + out[1], 1.0, 1e-15);
}

TEST(UpdateWeights, SimplexPreserved) {
  Rng rng(2);
  std::vector<double> w(40, 1.0 / 40.0);
  std::vector<int> y(40), p(40);
  for (int round = 0; round < 1000; ++round) {
    for (int i = 0; i < 40; ++i) {
      y[i] = static_cast<int>(rng.below(3));
      p[i] = static_cast<int>(rng.below(3));
    }
    w = update_weights(w, p, y, alpha(rng.uniform() * 0.66, 3, rng.uniform()), iota_rows(40));
    double sum = 0.0;
    for (double v : w) {
      ASSERT_GE(v, 0.0);
      sum += v;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

namespace {

struct RoundFixture {
  Matrix x;
  std::vector<int> y;
  std::vector<std::size_t> train, val;
  BoostState state;

  RoundFixture() {
    Rng rng(3);
    x = oracle::random_matrix(rng, 30, 2);
    for (int i = 0; i < 30; ++i) y.push_back(x(i, 0) + 0.5 * rng.normal() > 0);
    train = iota_rows(24);
    for (std::size_t i = 24; i < 30; ++i) val.push_back(i);
    state.weights.assign(30, 0.0);
    for (auto i : train) state.weights[i] = 1.0 / 24.0;
  }
  RoundInputs inputs() const { return {x, y, 2, train, val}; }
};

AppnpConfig tiny_weak() {
  AppnpConfig c;
  c.hidden = 4;
  c.max_epochs = 20;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(RunRound, SingleCandidate) {
  RoundFixture f;
  std::vector<double> col(30);
  for (int i = 0; i < 30; ++i) col[i] = f.x(i, 1);
  const std::vector<CandidateGraph> c{build_adjacency(col, 0.2, 1)};
  const auto out = run_round(f.state, c, f.inputs(), tiny_weak(), 1.0);
  EXPECT_EQ(out.candidate, 0u);
  EXPECT_EQ(out.round.feature, 1u);
  EXPECT_EQ(out.round.error, weighted_error(out.predictions, f.y, f.state.weights, f.train));
  EXPECT_EQ(out.round.alpha, alpha(out.round.error, 2, 1.0));
}

TEST(RunRound, SelectsMinimumAndBreaksTiesByFeatureGammaKind) {
  RoundFixture f;
  std::vector<double> col(30);
  for (int i = 0; i < 30; ++i) col[i] = f.x(i, 0);
  const IntervalGraph g(col, 0.3);
  // Identical graphs give identical errors; the tie-break decides.
  const std::vector<CandidateGraph> tied{{1, 0.1, false, g}, {0, 0.5, true, g}, {0, 0.5, false, g},
                                         {0, 0.7, false, g}};
  const auto out = run_round(f.state, tied, f.inputs(), tiny_weak(), 1.0);
  EXPECT_EQ(out.candidate, 2u);

  const auto candidates = enumerate_candidates(f.x, [] {
    EncodingMeta m;
    m.columns.resize(2);
    m.columns[0].name = "a";
    m.columns[1].name = "b";
    return m;
  }(), {});
  const auto picked = run_round(f.state, candidates, f.inputs(), tiny_weak(), 1.0);
  for (double e : picked.candidate_errors) EXPECT_LE(picked.round.error, e);
}

TEST(RunRound, ParallelMatchesSerial) {
  RoundFixture f;
  const auto candidates = enumerate_candidates(f.x, [] {
    EncodingMeta m;
    m.columns.resize(2);
    m.columns[0].name = "a";
    m.columns[1].name = "b";
    return m;
  }(), {});
  const auto serial = run_round(f.state, candidates, f.inputs(), tiny_weak(), 1.0, AlphaRule::halved, 1);
  const auto parallel = run_round(f.state, candidates, f.inputs(), tiny_weak(), 1.0, AlphaRule::halved, 4);
  EXPECT_EQ(serial.candidate, parallel.candidate);
  EXPECT_EQ(serial.candidate_errors, parallel.candidate_errors);
  EXPECT_EQ(serial.round.model.w1, parallel.round.model.w1);
}

TEST(Fit, SingleRound) {
  const Dataset ds = synthetic_dataset(200, 2, 0.9, 1);
  FitSummary summary;
  const Ensemble e = fit(quick_config(1, 1), ds, &summary);
  EXPECT_EQ(e.rounds.size(), 1u);
  EXPECT_EQ(summary.rounds.size(), 1u);
  EXPECT_EQ(summary.stop_reason, "reached the estimator count");
  EXPECT_EQ(e.reference.rows(), static_cast<Eigen::Index>(ds.rows_in(Split::train).size() +
                                                          ds.rows_in(Split::val).size()));
}

TEST(Fit, NoWeakLearnability) {
  // Constant features and balanced labels: any learner predicts one class.
  RawTable table;
  table.rows = 20;
  Column c;
  c.name = "flat";
  c.numbers.assign(20, 3.0);
  table.columns.push_back(c);
  std::vector<std::optional<std::string>> labels;
  for (int i = 0; i < 20; ++i) labels.push_back(i % 2 ? "a" : "b");
  std::vector<Split> split(20, Split::train);
  split[18] = split[19] = Split::val;
  split[16] = split[17] = Split::test;
  // 8 of each class on train rows.
  const Dataset ds = fit_encoder(table, labels, split);
  try {
    fit(quick_config(3, 1), ds);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no weak learnability"), std::string::npos);
  }
}

TEST(Fit, DeterministicAcrossWorkerCounts) {
  const Dataset ds = synthetic_dataset(240, 3, 0.8, 2);
  BoostConfig c = quick_config(3, 7);
  const Ensemble a = fit(c, ds);
  c.workers = 3;
  const Ensemble b = fit(c, ds);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t t = 0; t < a.rounds.size(); ++t) {
    EXPECT_EQ(a.rounds[t].feature, b.rounds[t].feature);
    EXPECT_EQ(a.rounds[t].alpha, b.rounds[t].alpha);
    EXPECT_EQ(a.rounds[t].model.w2, b.rounds[t].model.w2);
  }
}

TEST(Fit, RoundLogNamesFeatureAndCandidateGamma) {
  const Dataset ds = synthetic_dataset(200, 2, 0.9, 3);
  FitSummary summary;
  const Ensemble e = fit(quick_config(3, 3), ds, &summary);
  const auto names = ds.encoder.feature_names();
  for (std::size_t t = 0; t < e.rounds.size(); ++t) {
    const auto& log = summary.rounds[t];
    ASSERT_LT(log.feature, names.size());
    EXPECT_EQ(log.feature_name, names[log.feature]);
    std::vector<double> col(static_cast<std::size_t>(e.reference.rows()));
    for (std::size_t i = 0; i < col.size(); ++i) col[i] = e.reference(i, log.feature);
    const auto t_set = quantile_thresholds(col, log.feature, kDefaultPairCap, derive_seed(3, "sampling"));
    EXPECT_NE(std::find(t_set.gammas.begin(), t_set.gammas.end(), log.gamma), t_set.gammas.end());
  }
}

TEST(Fit, TrainErrorCurveMostlyNonIncreasing) {
  const Dataset ds = synthetic_dataset(2000, 2, 0.9, 1);
  BoostConfig c = quick_config(10, 1);
  c.weak.hidden = 16;
  c.weak.max_epochs = 60;
  c.weak.patience = 10;
  c.weak.learning_rate = 5e-3;
  FitSummary summary;
  fit(c, ds, &summary);
  // Fitting may end early on a discarded round; judge the rounds that were kept.
  std::size_t kept = 0;
  while (kept < summary.rounds.size() && summary.rounds[kept].kept) ++kept;
  ASSERT_GE(kept, 4u);
  std::size_t non_increasing = 1;  // round 1 has no predecessor
  for (std::size_t t = 1; t < kept; ++t)
    non_increasing += summary.rounds[t].ensemble_train_error <= summary.rounds[t - 1].ensemble_train_error;
  EXPECT_GE(non_increasing + 2, kept);
}

TEST(PredictEnsemble, SingleRoundEqualsWeakPrediction) {
  const Dataset ds = synthetic_dataset(200, 2, 0.9, 4);
  const Ensemble e = fit(quick_config(1, 4), ds);
  const auto test = ds.rows_in(Split::test);
  Matrix xt(static_cast<Eigen::Index>(test.size()), ds.x.cols());
  for (std::size_t r = 0; r < test.size(); ++r) xt.row(r) = ds.x.row(test[r]);
  const auto ens = predict_ensemble(e, xt);

  Matrix nodes(e.reference.rows() + xt.rows(), xt.cols());
  nodes << e.reference, xt;
  std::vector<double> col(static_cast<std::size_t>(nodes.rows()));
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = nodes(i, e.rounds[0].feature);
  const auto weak = predict(e.rounds[0].model, nodes, IntervalGraph(col, e.rounds[0].gamma));
  for (std::size_t r = 0; r < test.size(); ++r) {
    EXPECT_EQ(ens.labels[r], weak.labels[e.reference.rows() + r]);
    EXPECT_EQ(ens.scores(r, ens.labels[r]), 1.0);
  }
}

TEST(PredictEnsemble, WeightedVote) {
  Ensemble e;
  e.num_classes = 2;
  e.reference = Matrix::Zero(3, 1);
  e.rounds.push_back(constant_round(1, 2, 0, 2.0));
  e.rounds.push_back(constant_round(1, 2, 1, 1.0));
  const auto p = predict_ensemble(e, Matrix::Zero(2, 1));
  EXPECT_EQ(p.labels, (std::vector<int>{0, 0}));
  EXPECT_NEAR(p.scores(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.scores(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(predict_ensemble(e.prefix(1), Matrix::Zero(1, 1)).labels, (std::vector<int>{0}));
}

TEST(PredictEnsemble, ReferenceRowsFedBackMatchTrainingPredictions) {
  const Dataset ds = synthetic_dataset(300, 3, 0.9, 5);
  const Ensemble e = fit(quick_config(3, 5), ds);
  const auto fitted = predict_reference(e);
  const auto fed_back = predict_ensemble(e, e.reference);
  EXPECT_EQ(fitted.labels, fed_back.labels);
  EXPECT_LE((fitted.scores - fed_back.scores).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PredictEnsemble, ColumnCountMismatch) {
  Ensemble e;
  e.num_classes = 2;
  e.reference = Matrix::Zero(3, 2);
  e.rounds.push_back(constant_round(2, 2, 0, 1.0));
  EXPECT_THROW(predict_ensemble(e, Matrix::Zero(1, 3)), DataError);
}

TEST(BoostConfig, Validation) {
  BoostConfig c;
  c.estimators = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.estimators = 1;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.learning_rate = 1.0;
  EXPECT_NO_THROW(c.validate());
}
