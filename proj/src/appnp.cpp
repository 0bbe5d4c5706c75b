#include "graphboost/appnp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "graphboost/rng.hpp"

namespace graphboost {

void AppnpConfig::validate() const {
  if (hidden == 0) throw ConfigError("hidden dimension must be positive");
  if (!(teleport > 0.0 && teleport <= 1.0)) throw ConfigError("teleport probability must be in (0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
}

AppnpModel AppnpModel::initialize(const AppnpConfig& config, std::size_t inputs, std::size_t classes) {
  config.validate();
  const auto h = static_cast<Eigen::Index>(config.hidden);
  const auto m = static_cast<Eigen::Index>(inputs);
  const auto k = static_cast<Eigen::Index>(classes);
  Rng rng(config.seed, "init");
  AppnpModel model;
  model.config = config;
  model.w1.resize(h, m);
  model.w2.resize(k, h);
  const double he = inputs > 0 ? std::sqrt(6.0 / static_cast<double>(inputs)) : 0.0;
  const double glorot = std::sqrt(6.0 / static_cast<double>(config.hidden + classes));
  for (Eigen::Index i = 0; i < model.w1.size(); ++i) model.w1.data()[i] = he * (2.0 * rng.uniform() - 1.0);
  for (Eigen::Index i = 0; i < model.w2.size(); ++i) model.w2.data()[i] = glorot * (2.0 * rng.uniform() - 1.0);
  model.b1 = Vector::Zero(h);
  model.b2 = Vector::Zero(k);
  return model;
}

Matrix forward(const AppnpModel& model, const Matrix& x, const Propagator& a_hat,
               bool dropout_active, std::uint64_t dropout_seed, ForwardCache* cache) {
  if (static_cast<std::size_t>(x.cols()) != model.inputs())
    throw DataError("feature count does not match model inputs");
  if (a_hat.nodes() != static_cast<std::size_t>(x.rows()))
    throw DataError("adjacency node count does not match sample count");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.pre_activation = x * model.w1.transpose();
  c.pre_activation.rowwise() += model.b1.transpose();
  c.hidden = c.pre_activation.cwiseMax(0.0);

  const double p = model.config.dropout;
  if (dropout_active && p > 0.0) {
    Rng rng(dropout_seed);
    c.dropout_scale.resize(c.hidden.rows(), c.hidden.cols());
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < c.dropout_scale.size(); ++i)
      c.dropout_scale.data()[i] = rng.uniform() < p ? 0.0 : keep_scale;
    c.hidden = c.hidden.cwiseProduct(c.dropout_scale);
  } else {
    c.dropout_scale.resize(0, 0);
  }

  c.h0 = c.hidden * model.w2.transpose();
  c.h0.rowwise() += model.b2.transpose();
  if (!c.h0.allFinite()) throw NumericError("non-finite activations in MLP output");

  const double teleport = model.config.teleport;
  Matrix z = c.h0;
  if (teleport < 1.0) {
    Matrix propagated;
    for (std::size_t step = 0; step < model.config.propagation_steps; ++step) {
      a_hat.multiply(z, propagated);
      z = (1.0 - teleport) * propagated + teleport * c.h0;
      if (!z.allFinite())
        throw NumericError("non-finite activations in propagation step " + std::to_string(step + 1));
    }
  }
  return z;
}

namespace {

double weight_sum(std::span<const double> w, std::span<const std::size_t> rows) {
  double total = 0.0;
  for (std::size_t i : rows) total += w[i];
  return total;
}

}  // namespace

double loss(const Matrix& logits, std::span<const int> y, std::span<const double> w,
            std::span<const std::size_t> rows, double weight_decay, const AppnpModel& model) {
  const double total = weight_sum(w, rows);
  if (!(total > 0.0)) throw DataError("loss: masked sample weights sum to zero");
  double acc = 0.0;
  for (std::size_t i : rows) {
    const auto row = logits.row(static_cast<Eigen::Index>(i));
    const double top = row.maxCoeff();
    const double lse = top + std::log((row.array() - top).exp().sum());
    acc += w[i] * (lse - row(y[i]));
  }
  return acc / total + weight_decay * (model.w1.squaredNorm() + model.w2.squaredNorm());
}

Matrix loss_gradient(const Matrix& logits, std::span<const int> y, std::span<const double> w,
                     std::span<const std::size_t> rows) {
  const double total = weight_sum(w, rows);
  if (!(total > 0.0)) throw DataError("loss: masked sample weights sum to zero");
  Matrix grad = Matrix::Zero(logits.rows(), logits.cols());
  for (std::size_t i : rows) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto row = logits.row(r);
    const double top = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - top).exp();
    e /= e.sum();
    e(y[i]) -= 1.0;
    grad.row(r) = (w[i] / total) * e;
  }
  return grad;
}

Gradients backward(const AppnpModel& model, const Matrix& x, const ForwardCache& cache,
                   const Propagator& a_hat, const Matrix& logit_grad, double weight_decay) {
  const double teleport = model.config.teleport;
  Matrix d_h0;
  if (teleport < 1.0 && model.config.propagation_steps > 0) {
    // Â is symmetric, so the transposed multiply is another multiply.
    d_h0 = Matrix::Zero(logit_grad.rows(), logit_grad.cols());
    Matrix g = logit_grad;
    Matrix propagated;
    for (std::size_t step = 0; step < model.config.propagation_steps; ++step) {
      d_h0 += teleport * g;
      a_hat.multiply(g, propagated);
      g = (1.0 - teleport) * propagated;
    }
    d_h0 += g;
  } else {
    d_h0 = logit_grad;
  }

  Gradients grads;
  grads.w2 = d_h0.transpose() * cache.hidden + 2.0 * weight_decay * model.w2;
  grads.b2 = d_h0.colwise().sum().transpose();
  Matrix d_hidden = d_h0 * model.w2;
  if (cache.dropout_scale.size() > 0) d_hidden = d_hidden.cwiseProduct(cache.dropout_scale);
  Matrix d_pre = (cache.pre_activation.array() > 0.0).select(d_hidden, 0.0);
  grads.w1 = d_pre.transpose() * x + 2.0 * weight_decay * model.w1;
  grads.b1 = d_pre.colwise().sum().transpose();
  return grads;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - top).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Prediction predict(const AppnpModel& model, const Matrix& x, const Propagator& a_hat) {
  const Matrix logits = forward(model, x, a_hat);
  Prediction out;
  out.labels = argmax_rows(logits);
  out.probabilities = softmax_rows(logits);
  return out;
}

namespace {

struct AdamSlot {
  Matrix m, v;
  explicit AdamSlot(const Matrix& like) : m(Matrix::Zero(like.rows(), like.cols())), v(m) {}

  void step(Matrix& param, const Matrix& grad, double lr, std::size_t t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

double weighted_error_of(std::span<const int> predicted, std::span<const int> y,
                         std::span<const double> w, std::span<const std::size_t> rows) {
  double wrong = 0.0, total = 0.0;
  for (std::size_t i : rows) {
    total += w[i];
    if (predicted[i] != y[i]) wrong += w[i];
  }
  if (!(total > 0.0)) throw DataError("validation weights sum to zero");
  return wrong / total;
}

}  // namespace

TrainResult train_weak(const AppnpConfig& config, const Matrix& x, const Propagator& a_hat,
                       std::span<const int> y, int num_classes, std::span<const double> w,
                       std::span<const std::size_t> train_rows, std::span<const std::size_t> val_rows) {
  config.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n || w.size() != n) throw DataError("labels and weights need one entry per row");
  if (train_rows.empty()) throw DataError("train rows are empty");
  {
    std::vector<char> seen(n, 0);
    for (std::size_t i : train_rows) seen[i] = 1;
    for (std::size_t i : val_rows)
      if (seen[i]) throw DataError("train and validation rows overlap");
  }

  TrainResult result{AppnpModel::initialize(config, static_cast<std::size_t>(x.cols()),
                                            static_cast<std::size_t>(num_classes)),
                     {}};
  AppnpModel& model = result.model;
  TrainReport& report = result.report;

  // Bias vectors ride along as single-column matrices for Adam.
  Matrix b1 = model.b1, b2 = model.b2;
  AdamSlot s_w1(model.w1), s_b1(b1), s_w2(model.w2), s_b2(b2);

  AppnpModel best = model;
  std::size_t since_best = 0;
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Matrix logits =
        forward(model, x, a_hat, true, derive_seed(config.seed, "dropout", epoch), &cache);
    const double train_loss = loss(logits, y, w, train_rows, config.weight_decay, model);
    if (!std::isfinite(train_loss))
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1));
    const Matrix dz = loss_gradient(logits, y, w, train_rows);
    const Gradients g = backward(model, x, cache, a_hat, dz, config.weight_decay);

    const double lr = 0.5 * config.learning_rate *
                      (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                                      static_cast<double>(config.max_epochs)));
    s_w1.step(model.w1, g.w1, lr, epoch + 1);
    s_w2.step(model.w2, g.w2, lr, epoch + 1);
    s_b1.step(b1, g.b1, lr, epoch + 1);
    s_b2.step(b2, g.b2, lr, epoch + 1);
    model.b1 = b1;
    model.b2 = b2;
    report.epochs = epoch + 1;

    if (val_rows.empty()) continue;
    const std::vector<int> predicted = argmax_rows(forward(model, x, a_hat));
    const double val_error = weighted_error_of(predicted, y, w, val_rows);
    if (!report.best_val_error || val_error < *report.best_val_error) {
      report.best_val_error = val_error;
      best = model;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }
  if (report.best_val_error) model = std::move(best);
  report.final_train_loss =
      loss(forward(model, x, a_hat), y, w, train_rows, config.weight_decay, model);
  return result;
}

}  // namespace graphboost
