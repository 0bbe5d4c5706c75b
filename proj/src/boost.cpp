#include "graphboost/boost.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "graphboost/rng.hpp"

namespace graphboost {

void BoostConfig::validate() const {
  if (estimators < 1) throw ConfigError("number of estimators must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("boosting learning rate must be in (0, 1]");
  weak.validate();
}

Ensemble Ensemble::prefix(std::size_t count) const {
  Ensemble out = *this;
  out.rounds.resize(std::min(count, rounds.size()));
  return out;
}

double weighted_error(std::span<const int> predicted, std::span<const int> y,
                      std::span<const double> w, std::span<const std::size_t> rows) {
  double err = 0.0;
  for (std::size_t i : rows)
    if (predicted[i] != y[i]) err += w[i];
  return err;
}

double alpha(double err, int num_classes, double eta, AlphaRule rule) {
  if (num_classes < 2) throw ConfigError("alpha needs at least 2 classes");
  const double e = std::clamp(err, 1e-10, 1.0 - 1e-10);
  const double log_odds = std::log((1.0 - e) / e);
  const double factor = rule == AlphaRule::halved ? 0.5 : 1.0;
  return eta * (factor * log_odds + std::log(static_cast<double>(num_classes - 1)));
}

std::vector<double> update_weights(std::span<const double> w, std::span<const int> predicted,
                                   std::span<const int> y, double alpha_t,
                                   std::span<const std::size_t> rows) {
  if (!std::isfinite(alpha_t)) throw NumericError("learner weight is not finite");
  std::vector<double> out(w.begin(), w.end());
  const double boost = std::exp(alpha_t);
  double total = 0.0;
  for (std::size_t i : rows) {
    if (predicted[i] != y[i]) out[i] *= boost;
    total += out[i];
  }
  if (!(total > 0.0 && std::isfinite(total))) throw NumericError("sample weights collapsed");
  for (std::size_t i : rows) out[i] /= total;
  return out;
}

RoundOutcome run_round(const BoostState& state, std::span<const CandidateGraph> candidates,
                       const RoundInputs& inputs, const AppnpConfig& weak, double eta,
                       AlphaRule rule, std::size_t workers) {
  if (state.terminated) throw Error("boosting already terminated: " + state.reason);
  if (candidates.empty()) throw DataError("no candidate graphs");

  const auto n = static_cast<std::size_t>(inputs.x.rows());
  std::vector<double> node_weights(n, 0.0);
  for (std::size_t i : inputs.train_rows) node_weights[i] = state.weights[i];
  for (std::size_t i : inputs.val_rows) node_weights[i] = 1.0 / static_cast<double>(inputs.val_rows.size());

  struct Trained {
    std::optional<TrainResult> result;
    std::vector<int> predictions;
    double error = std::numeric_limits<double>::quiet_NaN();
  };
  std::vector<Trained> trained(candidates.size());

  auto train_one = [&](std::size_t c) {
    const IntervalGraph& graph = candidates[c].graph;
    try {
      TrainResult r = train_weak(weak, inputs.x, graph, inputs.y, inputs.num_classes, node_weights,
                                 inputs.train_rows, inputs.val_rows);
      std::vector<int> predicted = predict(r.model, inputs.x, graph).labels;
      trained[c].error = weighted_error(predicted, inputs.y, state.weights, inputs.train_rows);
      trained[c].predictions = std::move(predicted);
      trained[c].result = std::move(r);
    } catch (const NumericError&) {
      // Diverged candidates drop out of the selection.
    }
  };

  const std::size_t width = std::clamp<std::size_t>(workers, 1, candidates.size());
  if (width == 1) {
    for (std::size_t c = 0; c < candidates.size(); ++c) train_one(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < width; ++t) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < candidates.size(); c = next++) {
          try {
            train_one(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  // Order: error, then feature index, then gamma, then quantile before expert.
  const auto ranks_before = [&](std::size_t a, std::size_t b) {
    const auto key = [&](std::size_t c) {
      return std::tuple(trained[c].error, candidates[c].feature, candidates[c].gamma, candidates[c].expert);
    };
    return key(a) < key(b);
  };
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (std::isnan(trained[c].error)) continue;
    if (!best || ranks_before(c, *best)) best = c;
  }
  if (!best) throw NumericError("all candidate learners diverged");

  RoundOutcome out;
  out.candidate = *best;
  for (const auto& t : trained) out.candidate_errors.push_back(t.error);
  Trained& chosen = trained[*best];
  out.round.feature = candidates[*best].feature;
  out.round.gamma = candidates[*best].gamma;
  out.round.expert = candidates[*best].expert;
  out.round.model = std::move(chosen.result->model);
  out.round.error = chosen.error;
  out.round.alpha = alpha(chosen.error, inputs.num_classes, eta, rule);
  out.report = chosen.result->report;
  out.predictions = std::move(chosen.predictions);
  return out;
}

namespace {

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

std::vector<double> column_of(const Matrix& x, std::size_t j) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

double vote_error(const Matrix& votes, std::span<const int> y, std::span<const std::size_t> rows) {
  const std::vector<int> labels = argmax_rows(votes);
  std::size_t wrong = 0;
  for (std::size_t i : rows) wrong += labels[i] != y[i];
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

// Alpha-weighted votes of every round over `nodes`, reported for rows
// [offset, nodes.rows()).
EnsemblePrediction vote(const Ensemble& ensemble, const Matrix& nodes, std::size_t offset) {
  const auto n = static_cast<Eigen::Index>(nodes.rows());
  const auto out_rows = n - static_cast<Eigen::Index>(offset);
  EnsemblePrediction out;
  out.scores = Matrix::Zero(out_rows, ensemble.num_classes);
  if (out_rows == 0) return out;
  double total_alpha = 0.0;
  for (const auto& round : ensemble.rounds) {
    const std::vector<double> values = column_of(nodes, round.feature);
    const IntervalGraph graph(values, round.gamma);
    const std::vector<int> labels = predict(round.model, nodes, graph).labels;
    for (Eigen::Index i = 0; i < out_rows; ++i)
      out.scores(i, labels[offset + static_cast<std::size_t>(i)]) += round.alpha;
    total_alpha += round.alpha;
  }
  out.labels = argmax_rows(out.scores);
  if (total_alpha > 0.0) out.scores /= total_alpha;
  return out;
}

}  // namespace

Ensemble fit(const BoostConfig& config, const Dataset& dataset, FitSummary* summary,
             const RoundObserver& observer) {
  config.validate();
  if (dataset.num_classes < 2) throw DataError("need at least 2 classes to fit");

  std::vector<std::size_t> fit_rows;
  for (std::size_t i = 0; i < dataset.rows(); ++i)
    if (dataset.split[i] != Split::test) fit_rows.push_back(i);

  Ensemble ensemble;
  ensemble.num_classes = dataset.num_classes;
  ensemble.encoder = dataset.encoder;
  ensemble.reference = gather_rows(dataset.x, fit_rows);

  std::vector<int> y;
  std::vector<std::size_t> train, val;
  for (std::size_t r = 0; r < fit_rows.size(); ++r) {
    y.push_back(dataset.y[fit_rows[r]]);
    (dataset.split[fit_rows[r]] == Split::train ? train : val).push_back(r);
  }
  if (train.empty()) throw DataError("train split is empty");

  FitSummary local;
  FitSummary& log = summary ? *summary : local;
  log = {};
  const std::vector<CandidateGraph> candidates = enumerate_candidates(
      ensemble.reference, dataset.encoder, config.experts,
      {config.pair_cap, config.edge_cap, derive_seed(config.seed, "sampling")}, &log.warnings);
  if (candidates.empty()) throw DataError("every candidate graph exceeded the edge cap");

  const auto k = dataset.num_classes;
  const double threshold = static_cast<double>(k - 1) / static_cast<double>(k);
  BoostState state;
  state.weights.assign(fit_rows.size(), 0.0);
  for (std::size_t i : train) state.weights[i] = 1.0 / static_cast<double>(train.size());

  Matrix votes = Matrix::Zero(static_cast<Eigen::Index>(fit_rows.size()), k);
  const RoundInputs inputs{ensemble.reference, y, k, train, val};
  const auto names = dataset.encoder.feature_names();

  for (state.iteration = 0; state.iteration < config.estimators; ++state.iteration) {
    AppnpConfig weak = config.weak;
    weak.seed = derive_seed(config.seed, "init", state.iteration);
    RoundOutcome outcome =
        run_round(state, candidates, inputs, weak, config.learning_rate, config.alpha_rule, config.workers);

    RoundLog entry{state.iteration + 1, outcome.round.feature, names[outcome.round.feature],
                   outcome.round.gamma, outcome.round.expert, outcome.round.error,
                   outcome.round.alpha, 0.0, true};

    if (outcome.round.error >= threshold) {
      entry.kept = false;
      entry.ensemble_train_error = ensemble.rounds.empty() ? 1.0 : vote_error(votes, y, train);
      log.rounds.push_back(entry);
      if (observer) observer(entry);
      if (ensemble.rounds.empty())
        throw DataError("no weak learnability: first round error " + std::to_string(outcome.round.error) +
                        " >= " + std::to_string(threshold));
      state.terminated = true;
      state.reason = "weak learner error reached (K-1)/K; round discarded";
      break;
    }

    for (std::size_t r = 0; r < fit_rows.size(); ++r)
      votes(static_cast<Eigen::Index>(r), outcome.predictions[r]) += outcome.round.alpha;
    entry.ensemble_train_error = vote_error(votes, y, train);
    state.weights = update_weights(state.weights, outcome.predictions, y, outcome.round.alpha, train);
    ensemble.rounds.push_back(std::move(outcome.round));
    log.rounds.push_back(entry);
    if (observer) observer(entry);

    if (entry.ensemble_train_error >= threshold) {
      state.terminated = true;
      state.reason = "ensemble train error reached (K-1)/K";
      break;
    }
  }
  log.stop_reason = state.terminated ? state.reason : "reached the estimator count";
  return ensemble;
}

EnsemblePrediction predict_ensemble(const Ensemble& ensemble, const Matrix& x_new) {
  if (x_new.cols() != ensemble.reference.cols())
    throw DataError("new rows have " + std::to_string(x_new.cols()) + " features, model expects " +
                    std::to_string(ensemble.reference.cols()));
  Matrix nodes(ensemble.reference.rows() + x_new.rows(), ensemble.reference.cols());
  nodes.topRows(ensemble.reference.rows()) = ensemble.reference;
  nodes.bottomRows(x_new.rows()) = x_new;
  return vote(ensemble, nodes, static_cast<std::size_t>(ensemble.reference.rows()));
}

EnsemblePrediction predict_reference(const Ensemble& ensemble) {
  return vote(ensemble, ensemble.reference, 0);
}

}  // namespace graphboost
