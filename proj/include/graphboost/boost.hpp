#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graphboost/appnp.hpp"
#include "graphboost/data.hpp"
#include "graphboost/graph.hpp"

namespace graphboost {

/// Learner-weight formula. `halved` keeps the 1/2 factor on the log-odds
/// term; `canonical` is textbook SAMME.
enum class AlphaRule { halved, canonical };

struct BoostConfig {
  std::size_t estimators = 10;
  /// Shrinkage applied to every learner weight, in (0, 1].
  double learning_rate = 1.0;
  AppnpConfig weak;
  std::vector<ExpertEdge> experts;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  AlphaRule alpha_rule = AlphaRule::halved;
  std::size_t pair_cap = kDefaultPairCap;
  std::size_t edge_cap = kDefaultEdgeCap;

  void validate() const;
};

struct WeakRound {
  std::size_t feature = 0;
  double gamma = 0.0;
  bool expert = false;
  AppnpModel model;
  double alpha = 0.0;
  double error = 0.0;
};

/// Boosting weights live on the fitting nodes; entries outside the train
/// rows stay zero.
struct BoostState {
  std::vector<double> weights;
  std::size_t iteration = 0;
  bool terminated = false;
  std::string reason;
};

/// Fitted model. `reference` holds the encoded rows the graphs were built
/// over (train and validation rows); prediction inserts new rows next to them.
struct Ensemble {
  std::vector<WeakRound> rounds;
  int num_classes = 0;
  EncodingMeta encoder;
  Matrix reference;

  std::vector<std::string> feature_names() const { return encoder.feature_names(); }
  /// Copy keeping only the first `count` rounds.
  Ensemble prefix(std::size_t count) const;
};

double weighted_error(std::span<const int> predicted, std::span<const int> y,
                      std::span<const double> w, std::span<const std::size_t> rows);

/// eta * (1/2 log((1-err)/err) + log(K-1)) under the halved rule, with err
/// clamped to [1e-10, 1-1e-10].
double alpha(double err, int num_classes, double eta, AlphaRule rule = AlphaRule::halved);

/// Multiplies misclassified rows by exp(alpha) and renormalizes over `rows`.
std::vector<double> update_weights(std::span<const double> w, std::span<const int> predicted,
                                   std::span<const int> y, double alpha_t,
                                   std::span<const std::size_t> rows);

struct RoundInputs {
  const Matrix& x;
  std::span<const int> y;
  int num_classes;
  std::span<const std::size_t> train_rows;
  std::span<const std::size_t> val_rows;
};

struct RoundOutcome {
  WeakRound round;
  std::size_t candidate = 0;
  /// Predictions of the selected learner on every fitting node.
  std::vector<int> predictions;
  /// Weighted train error per candidate; NaN where training diverged.
  std::vector<double> candidate_errors;
  TrainReport report;
};

/// Trains one learner per candidate and keeps the one with the lowest
/// weighted train error; ties go to the lower feature index, then the
/// smaller gamma, then the quantile candidate over the expert one.
RoundOutcome run_round(const BoostState& state, std::span<const CandidateGraph> candidates,
                       const RoundInputs& inputs, const AppnpConfig& weak, double eta,
                       AlphaRule rule = AlphaRule::halved, std::size_t workers = 1);

struct RoundLog {
  std::size_t round = 0;  // 1-based
  std::size_t feature = 0;
  std::string feature_name;
  double gamma = 0.0;
  bool expert = false;
  double error = 0.0;
  double alpha = 0.0;
  double ensemble_train_error = 0.0;
  bool kept = true;
};

struct FitSummary {
  std::vector<RoundLog> rounds;
  std::string stop_reason;
  std::vector<std::string> warnings;
};

using RoundObserver = std::function<void(const RoundLog&)>;

/// Runs the boosting loop over the train and validation rows of `dataset`.
Ensemble fit(const BoostConfig& config, const Dataset& dataset, FitSummary* summary = nullptr,
             const RoundObserver& observer = {});

struct EnsemblePrediction {
  std::vector<int> labels;
  /// Alpha-weighted votes per class, normalized to sum 1 per row.
  Matrix scores;
};

/// Predicts encoded rows by inserting them into each round's graph next to
/// the stored reference rows.
EnsemblePrediction predict_ensemble(const Ensemble& ensemble, const Matrix& x_new);
/// Predictions for the reference rows on the fitting graph alone.
EnsemblePrediction predict_reference(const Ensemble& ensemble);

}  // namespace graphboost
