#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "graphboost/common.hpp"
#include "graphboost/graph.hpp"

namespace graphboost {

struct AppnpConfig {
  std::size_t hidden = 64;
  std::size_t propagation_steps = 5;
  double teleport = 0.1;
  double dropout = 0.1;
  double learning_rate = 5e-3;
  double weight_decay = 1e-4;
  std::size_t max_epochs = 100;
  /// Epochs without validation improvement before stopping; 0 disables.
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const AppnpConfig&) const = default;
};

/// Two-layer MLP head followed by personalized-PageRank propagation.
struct AppnpModel {
  Matrix w1;  // hidden x inputs
  Vector b1;  // hidden
  Matrix w2;  // classes x hidden
  Vector b2;  // classes
  AppnpConfig config;

  std::size_t inputs() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t classes() const { return static_cast<std::size_t>(w2.rows()); }

  /// He-uniform W1, Glorot-uniform W2, zero biases; seeded by config.seed.
  static AppnpModel initialize(const AppnpConfig& config, std::size_t inputs, std::size_t classes);
};

struct ForwardCache {
  Matrix pre_activation;  // X W1^T + b1
  Matrix hidden;          // after ReLU and dropout
  Matrix dropout_scale;   // empty when dropout is off
  Matrix h0;              // MLP output
};

/// Logits Z after `propagation_steps` rounds of
/// Z <- (1 - teleport) Â Z + teleport H0, starting from Z = H0.
Matrix forward(const AppnpModel& model, const Matrix& x, const Propagator& a_hat,
               bool dropout_active = false, std::uint64_t dropout_seed = 0,
               ForwardCache* cache = nullptr);

/// Weighted softmax cross-entropy over `rows`, normalized by the weight sum,
/// plus weight_decay * (|W1|^2 + |W2|^2).
double loss(const Matrix& logits, std::span<const int> y, std::span<const double> w,
            std::span<const std::size_t> rows, double weight_decay, const AppnpModel& model);

/// d(loss)/d(logits), excluding the decay term.
Matrix loss_gradient(const Matrix& logits, std::span<const int> y, std::span<const double> w,
                     std::span<const std::size_t> rows);

struct Gradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Reverse pass through propagation and the MLP, adding the decay gradient.
Gradients backward(const AppnpModel& model, const Matrix& x, const ForwardCache& cache,
                   const Propagator& a_hat, const Matrix& logit_grad, double weight_decay);

struct TrainReport {
  std::size_t epochs = 0;
  /// Unset when there was no validation set.
  std::optional<double> best_val_error;
  double final_train_loss = 0.0;
  bool early_stopped = false;
};

struct TrainResult {
  AppnpModel model;
  TrainReport report;
};

/// Full-batch Adam with cosine-annealed learning rate. Keeps the parameters
/// with the lowest weighted validation error. With no validation rows all
/// epochs run and the final parameters are kept.
TrainResult train_weak(const AppnpConfig& config, const Matrix& x, const Propagator& a_hat,
                       std::span<const int> y, int num_classes, std::span<const double> w,
                       std::span<const std::size_t> train_rows, std::span<const std::size_t> val_rows);

struct Prediction {
  std::vector<int> labels;
  Matrix probabilities;
};

Prediction predict(const AppnpModel& model, const Matrix& x, const Propagator& a_hat);

/// Row-wise softmax and argmax with lowest-index tie-break.
Matrix softmax_rows(const Matrix& logits);
std::vector<int> argmax_rows(const Matrix& scores);

}  // namespace graphboost
