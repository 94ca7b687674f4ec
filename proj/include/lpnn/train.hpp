#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "lpnn/dataio.hpp"
#include "lpnn/network.hpp"

namespace lpnn {

// ---------------------------------------------------------------------------
// Losses

enum class LossKind { mse, logistic, softmax_ce };

/// Regression targets are vectors, classification targets class indices
/// (0/1 for logistic).
using Target = std::variant<Vector, int>;

inline double loss(const Vector& pred, const Target& target, LossKind kind) {
  switch (kind) {
    case LossKind::mse: {
      const Vector* y = std::get_if<Vector>(&target);
      if (!y) throw ShapeError("loss: mse needs a vector target");
      if (y->size() != pred.size()) throw ShapeError("loss: target length mismatch");
      return (pred - *y).squaredNorm() / static_cast<double>(pred.size());
    }
    case LossKind::logistic: {
      const int* y = std::get_if<int>(&target);
      if (!y || (*y != 0 && *y != 1)) throw DataError("loss: logistic target must be 0 or 1");
      if (pred.size() != 1) throw ShapeError("loss: logistic needs a single logit");
      const double z = pred(0);
      // log(1+e^z) - y*z, computed without overflow
      return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - *y * z;
    }
    case LossKind::softmax_ce: {
      const int* y = std::get_if<int>(&target);
      if (!y) throw ShapeError("loss: softmax_ce needs a class index");
      if (*y < 0 || *y >= pred.size()) throw DataError("loss: class index out of range");
      const double zmax = pred.maxCoeff();
      const double lse = zmax + std::log((pred.array() - zmax).exp().sum());
      return lse - pred(*y);
    }
  }
  throw ConfigError("loss: unknown kind");
}

inline Vector loss_grad(const Vector& pred, const Target& target, LossKind kind) {
  switch (kind) {
    case LossKind::mse: {
      const Vector& y = std::get<Vector>(target);
      return 2.0 / static_cast<double>(pred.size()) * (pred - y);
    }
    case LossKind::logistic: {
      const int y = std::get<int>(target);
      Vector g(1);
      g(0) = 1.0 / (1.0 + std::exp(-pred(0))) - y;
      return g;
    }
    case LossKind::softmax_ce: {
      const int y = std::get<int>(target);
      const double zmax = pred.maxCoeff();
      Vector p = (pred.array() - zmax).exp();
      p /= p.sum();
      p(y) -= 1.0;
      return p;
    }
  }
  throw ConfigError("loss_grad: unknown kind");
}

inline LossKind loss_kind_for(Head head) {
  switch (head) {
    case Head::binary_logit: return LossKind::logistic;
    case Head::kclass_logits: return LossKind::softmax_ce;
    default: return LossKind::mse;
  }
}

// ---------------------------------------------------------------------------
// Gradients

/// One tensor of gradient (or optimizer moment) per parameter tensor.
/// Slots for absent intercepts or BN layers stay zero-sized.
struct GradientSet {
  std::vector<Matrix> w, v;
  std::vector<Vector> b;
  std::vector<Vector> bn_gamma, bn_beta;

  static GradientSet zeros_like(const LadderNetwork& net) {
    GradientSet g;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const LadderLayer& layer = net.layers[l];
      g.w.push_back(Matrix::Zero(layer.w.rows(), layer.w.cols()));
      g.v.push_back(Matrix::Zero(layer.v.rows(), layer.v.cols()));
      g.b.push_back(layer.b ? Vector::Zero(layer.b->size()) : Vector());
      if (const BatchNormParams* p = net.bn_at(l)) {
        g.bn_gamma.push_back(Vector::Zero(p->width()));
        g.bn_beta.push_back(Vector::Zero(p->width()));
      } else {
        g.bn_gamma.push_back(Vector());
        g.bn_beta.push_back(Vector());
      }
    }
    return g;
  }

  bool all_finite() const {
    for (const auto& m : w)
      if (!m.allFinite()) return false;
    for (const auto& m : v)
      if (!m.allFinite()) return false;
    for (const auto& x : b)
      if (x.size() && !x.allFinite()) return false;
    return true;
  }
};

/// Exact single-sample gradients of loss(forward(net, x), target) for every
/// W, V, b, and BN gamma/beta. BN layers are treated in inference mode.
/// A fixed dropout mask (0/1 entries per layer) may be supplied; survivors
/// are rescaled by 1/(1-rate) as in training.
inline GradientSet grad_params(const LadderNetwork& net, const Vector& x, const Target& target,
                               LossKind kind, const std::vector<Vector>* dropout_masks = nullptr,
                               double dropout_rate = 0.0) {
  if (x.size() != net.input_dim) throw ShapeError("grad_params: input length mismatch");
  const std::size_t num_layers = net.layers.size();

  // Forward, keeping per-layer intermediates.
  std::vector<Vector> h_in(num_layers);   // layer input
  std::vector<Vector> u(num_layers);      // W h + b
  std::vector<Vector> a(num_layers);      // V x
  std::vector<Vector> act(num_layers);    // u .* a, before BN/dropout
  Vector h = x;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const LadderLayer& layer = net.layers[l];
    h_in[l] = h;
    u[l] = layer.w * h;
    if (layer.b) u[l] += *layer.b;
    a[l] = layer.v * x;
    act[l] = (u[l].array() * a[l].array()).matrix();
    h = act[l];
    if (const BatchNormParams* p = net.bn_at(l)) h = p->apply(h);
    if (dropout_masks) {
      const Vector& mask = (*dropout_masks)[l];
      if (mask.size() != h.size()) throw ShapeError("grad_params: dropout mask length mismatch");
      h = (h.array() * mask.array() / (1.0 - dropout_rate)).matrix();
    }
  }

  GradientSet g = GradientSet::zeros_like(net);
  Vector grad = loss_grad(h, target, kind);
  for (std::size_t li = num_layers; li-- > 0;) {
    const LadderLayer& layer = net.layers[li];
    if (dropout_masks)
      grad = (grad.array() * (*dropout_masks)[li].array() / (1.0 - dropout_rate)).matrix();
    if (const BatchNormParams* p = net.bn_at(li)) {
      const Vector s = (p->sigma.array() + p->eps).matrix();
      g.bn_gamma[li] = (grad.array() * (act[li] - p->mu).array() / s.array()).matrix();
      g.bn_beta[li] = grad;
      grad = (grad.array() * p->gamma.array() / s.array()).matrix();
    }
    Vector du = (grad.array() * a[li].array()).matrix();
    Vector da = (grad.array() * u[li].array()).matrix();
    g.w[li] = du * h_in[li].transpose();
    g.v[li] = da * x.transpose();
    if (layer.b) g.b[li] = du;
    grad = layer.w.transpose() * du;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization and dropout

enum class BnMode { train, infer };

namespace detail {

struct BnBatchStats {
  Vector mu;     // batch column means
  Vector sigma;  // batch column stds (population)
};

// Train mode normalizes with batch statistics and updates the running
// stats by EMA: running <- momentum*running + (1-momentum)*batch.
inline Matrix bn_forward_impl(const Matrix& batch_h, BatchNormParams& params, BnMode mode,
                              double momentum, BnBatchStats* stats) {
  params.validate();
  if (batch_h.cols() != params.width()) throw ShapeError("bn_forward: width mismatch");
  if (mode == BnMode::infer) {
    Matrix out = batch_h;
    out.array().rowwise() -= params.mu.transpose().array();
    out.array().rowwise() /= (params.sigma.transpose().array() + params.eps);
    out.array().rowwise() *= params.gamma.transpose().array();
    out.array().rowwise() += params.beta.transpose().array();
    if (stats) *stats = {params.mu, params.sigma};
    return out;
  }
  const Index n = batch_h.rows();
  if (n < 2) throw ConfigError("bn_forward: train mode needs a batch of at least 2");
  Vector mu = batch_h.colwise().mean();
  Vector var = (batch_h.rowwise() - mu.transpose()).array().square().colwise().mean();
  Vector sigma = var.array().sqrt();

  Matrix out = batch_h;
  out.array().rowwise() -= mu.transpose().array();
  out.array().rowwise() /= (sigma.transpose().array() + params.eps);
  out.array().rowwise() *= params.gamma.transpose().array();
  out.array().rowwise() += params.beta.transpose().array();

  params.mu = momentum * params.mu + (1.0 - momentum) * mu;
  params.sigma = momentum * params.sigma + (1.0 - momentum) * sigma;
  if (stats) *stats = {std::move(mu), std::move(sigma)};
  return out;
}

}  // namespace detail

inline Matrix bn_forward(const Matrix& batch_h, BatchNormParams& params, BnMode mode,
                         double momentum = 0.9) {
  return detail::bn_forward_impl(batch_h, params, mode, momentum, nullptr);
}

/// Inverted dropout: zero entries with probability rate, scale survivors by
/// 1/(1-rate). At test time dropout is simply not applied.
inline Vector dropout_apply(const Vector& h, double rate, Rng& rng) {
  if (rate < 0 || rate >= 1) throw ConfigError("dropout_apply: rate must be in [0,1)");
  if (rate == 0) return h;
  Vector out(h.size());
  for (Index i = 0; i < h.size(); ++i) out(i) = rng.uniform() < rate ? 0.0 : h(i) / (1.0 - rate);
  return out;
}

// ---------------------------------------------------------------------------
// BN folding

/// Absorb a frozen BN layer into the layer that consumes its output:
///   W = W' diag(gamma/(sigma+eps)),  b = W'(beta - gamma.*mu/(sigma+eps)) + b'.
/// Consuming raw activations through the folded layer then reproduces
/// consuming BN outputs exactly.
inline LadderLayer fold_bn(const LadderLayer& next_layer, const BatchNormParams& bn) {
  bn.validate();
  if (next_layer.in_dim() != bn.width()) throw ShapeError("fold_bn: width mismatch");
  LadderLayer folded = next_layer;
  const Vector scale = bn.scale();
  const Vector shift = bn.shift();
  folded.w = next_layer.w * scale.asDiagonal();
  Vector b = next_layer.w * shift;
  if (next_layer.b) b += *next_layer.b;
  folded.b = b;
  return folded;
}

/// Fold every BN layer into its consuming layer, restoring a pure polynomial
/// network (with intercepts). BN on the final layer has no consumer and
/// cannot be folded.
inline LadderNetwork fold_network(const LadderNetwork& net) {
  if (!net.has_bn()) return net;
  if (net.bn_at(net.layers.size() - 1))
    throw ConfigError("fold_network: BN on the output layer cannot be folded");
  LadderNetwork out = net;
  out.bn.clear();
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
    if (const BatchNormParams* p = net.bn_at(l)) out.layers[l + 1] = fold_bn(out.layers[l + 1], *p);
  return out;
}

// ---------------------------------------------------------------------------
// Optimizers

struct TrainConfig {
  enum class Optimizer { sgd, adam };
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  double l2_weight = 0.0;
  double dropout_rate = 0.0;
  bool bn_enabled = false;
  std::uint64_t seed = 0;
  double bn_momentum = 0.9;

  void validate() const {
    if (learning_rate <= 0) throw ConfigError("TrainConfig: learning_rate must be positive");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be nonnegative");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be positive");
    if (l2_weight < 0) throw ConfigError("TrainConfig: l2_weight must be nonnegative");
    if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("TrainConfig: dropout_rate in [0,1)");
    if (bn_momentum < 0 || bn_momentum > 1) throw ConfigError("TrainConfig: bn_momentum in [0,1]");
  }
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename T>
void sgd_step(T& param, const T& grad, double lr, double l2) {
  param.array() -= lr * (grad.array() + l2 * param.array());
}

/// Standard bias-corrected Adam; step counts from 1.
template <typename T>
void adam_step(T& param, const T& grad, T& m, T& v, long step, double lr, double l2) {
  auto g = (grad.array() + l2 * param.array()).eval();
  m.array() = kAdamBeta1 * m.array() + (1.0 - kAdamBeta1) * g;
  v.array() = kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * g.square();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}

struct OptimizerState {
  GradientSet m, v;  // Adam moments; unused for SGD
  long step = 0;

  static OptimizerState init(const LadderNetwork& net) {
    return {GradientSet::zeros_like(net), GradientSet::zeros_like(net), 0};
  }
};

/// Apply one optimizer update to every parameter tensor. L2 decay acts on
/// W and V only.
inline void optimizer_step(LadderNetwork& net, const GradientSet& grads, OptimizerState& state,
                           const TrainConfig& cfg) {
  ++state.step;
  const double lr = cfg.learning_rate;
  const double l2 = cfg.l2_weight;
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v, double decay) {
    if (cfg.optimizer == TrainConfig::Optimizer::sgd)
      sgd_step(param, grad, lr, decay);
    else
      adam_step(param, grad, m, v, state.step, lr, decay);
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].w, grads.w[l], state.m.w[l], state.v.w[l], l2);
    update(net.layers[l].v, grads.v[l], state.m.v[l], state.v.v[l], l2);
    if (net.layers[l].b) update(*net.layers[l].b, grads.b[l], state.m.b[l], state.v.b[l], 0.0);
    if (!net.bn.empty() && net.bn[l]) {
      update(net.bn[l]->gamma, grads.bn_gamma[l], state.m.bn_gamma[l], state.v.bn_gamma[l], 0.0);
      update(net.bn[l]->beta, grads.bn_beta[l], state.m.bn_beta[l], state.v.bn_beta[l], 0.0);
    }
  }
}

// ---------------------------------------------------------------------------
// Batch gradients (training mode)

namespace detail {

inline Target target_at(const Dataset& data, int row, LossKind kind) {
  if (kind == LossKind::mse) {
    Vector y(1);
    y(0) = data.targets_reg(row);
    return y;
  }
  return data.targets_class[row];
}

struct BatchResult {
  GradientSet grads;  // mean over the batch
  double loss = 0.0;  // mean over the batch
};

// Minibatch forward/backward. BN train mode normalizes with batch statistics
// and backpropagates through them; dropout draws fresh masks from rng.
inline BatchResult batch_gradients(LadderNetwork& net, const Dataset& data,
                                   const std::vector<int>& idx, LossKind kind, BnMode bn_mode,
                                   double bn_momentum, Rng* dropout_rng) {
  const Index n = static_cast<Index>(idx.size());
  const std::size_t num_layers = net.layers.size();
  const double rate = dropout_rng ? net.dropout_rate : 0.0;

  Matrix x_batch(n, net.input_dim);
  for (Index i = 0; i < n; ++i) x_batch.row(i) = data.features.row(idx[i]);

  std::vector<Matrix> h_in(num_layers), u(num_layers), a(num_layers), act(num_layers);
  std::vector<Matrix> masks(num_layers);
  std::vector<BnBatchStats> bn_stats(num_layers);
  Matrix h = x_batch;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const LadderLayer& layer = net.layers[l];
    h_in[l] = h;
    u[l] = h * layer.w.transpose();
    if (layer.b) u[l].array().rowwise() += layer.b->transpose().array();
    a[l] = x_batch * layer.v.transpose();
    act[l] = (u[l].array() * a[l].array()).matrix();
    h = act[l];
    if (!net.bn.empty() && net.bn[l])
      h = bn_forward_impl(h, *net.bn[l], bn_mode, bn_momentum, &bn_stats[l]);
    if (rate > 0) {
      masks[l].resize(h.rows(), h.cols());
      for (Index r = 0; r < h.rows(); ++r)
        for (Index c = 0; c < h.cols(); ++c) masks[l](r, c) = dropout_rng->uniform() < rate ? 0.0 : 1.0;
      h = (h.array() * masks[l].array() / (1.0 - rate)).matrix();
    }
  }

  BatchResult res;
  res.grads = GradientSet::zeros_like(net);
  Matrix grad(n, net.output_dim());
  for (Index i = 0; i < n; ++i) {
    const Vector pred = h.row(i).transpose();
    const Target t = target_at(data, idx[i], kind);
    res.loss += loss(pred, t, kind);
    grad.row(i) = loss_grad(pred, t, kind).transpose();
  }
  res.loss /= static_cast<double>(n);
  grad /= static_cast<double>(n);

  for (std::size_t li = num_layers; li-- > 0;) {
    const LadderLayer& layer = net.layers[li];
    if (rate > 0) grad = (grad.array() * masks[li].array() / (1.0 - rate)).matrix();
    if (!net.bn.empty() && net.bn[li]) {
      const BatchNormParams& p = *net.bn[li];
      const BnBatchStats& st = bn_stats[li];
      const Vector s = (st.sigma.array() + p.eps).matrix();
      Matrix centered = act[li].rowwise() - st.mu.transpose();
      Matrix x_hat = centered.array().rowwise() / s.transpose().array();
      res.grads.bn_gamma[li] = (grad.array() * x_hat.array()).colwise().sum().transpose();
      res.grads.bn_beta[li] = grad.colwise().sum().transpose();
      Matrix g1 = grad.array().rowwise() * (p.gamma.array() / s.array()).transpose();
      if (bn_mode == BnMode::train) {
        // Backprop through batch mean and std (sigma = population std).
        const double nn = static_cast<double>(n);
        Vector col_g1 = g1.colwise().sum().transpose();
        Vector dsigma = -((grad.array() * centered.array()).colwise().sum().transpose().array() *
                          p.gamma.array() / s.array().square())
                            .matrix();
        Matrix dh = g1;
        dh.array().rowwise() -= (col_g1 / nn).transpose().array();
        for (Index c = 0; c < dh.cols(); ++c) {
          const double sig = st.sigma(c);
          if (sig > 1e-300)
            dh.col(c).array() += dsigma(c) / (nn * sig) * centered.col(c).array();
        }
        grad = std::move(dh);
      } else {
        grad = std::move(g1);
      }
    }
    Matrix du = (grad.array() * a[li].array()).matrix();
    Matrix da = (grad.array() * u[li].array()).matrix();
    res.grads.w[li] = du.transpose() * h_in[li];
    res.grads.v[li] = da.transpose() * x_batch;
    if (layer.b) res.grads.b[li] = du.colwise().sum().transpose();
    grad = du * layer.w;
  }
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics and the training loop

inline double dataset_loss(const LadderNetwork& net, const Dataset& data, LossKind kind) {
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const Vector pred = forward(net, data.features.row(i).transpose());
    total += loss(pred, detail::target_at(data, static_cast<int>(i), kind), kind);
  }
  return total / static_cast<double>(data.size());
}

inline double rmse(const LadderNetwork& net, const Dataset& data) {
  double ss = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const Vector pred = forward(net, data.features.row(i).transpose());
    const double diff = pred(0) - data.targets_reg(i);
    ss += diff * diff;
  }
  return std::sqrt(ss / static_cast<double>(data.size()));
}

inline double error_rate(const LadderNetwork& net, const Dataset& data) {
  Index wrong = 0;
  for (Index i = 0; i < data.size(); ++i) {
    const Vector pred = forward(net, data.features.row(i).transpose());
    int argmax = 0;
    if (net.head == Head::binary_logit) {
      argmax = pred(0) > 0 ? 1 : 0;
    } else {
      pred.maxCoeff(&argmax);
    }
    if (argmax != data.targets_class[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

/// Gaussian init: entries ~ N(0, (scale/sqrt(fan_in))^2) with fan_in the
/// consumed dimension (previous width for W, input dimension for V). The
/// default scale 0.5 damps the variance growth of repeated products on
/// standardized inputs.
inline LadderNetwork init_network(Index input_dim, const std::vector<Index>& widths, Head head,
                                  bool intercepts, double init_scale, std::uint64_t seed) {
  if (widths.empty()) throw ConfigError("init_network: need at least one layer");
  LadderNetwork net;
  net.input_dim = input_dim;
  net.head = head;
  Rng rng(seed);
  Index prev = input_dim;
  for (Index width : widths) {
    LadderLayer layer;
    layer.w = rng.normal_matrix(width, prev, init_scale / std::sqrt(static_cast<double>(prev)));
    layer.v = rng.normal_matrix(width, input_dim, init_scale / std::sqrt(static_cast<double>(input_dim)));
    if (intercepts) layer.b = Vector::Zero(width);
    net.layers.push_back(std::move(layer));
    prev = width;
  }
  net.validate();
  return net;
}

/// Attach identity-initialized BN to every layer except the output layer.
inline void attach_bn(LadderNetwork& net, double eps = 1e-5) {
  net.bn.assign(net.layers.size(), std::nullopt);
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    BatchNormParams p;
    const Index w = net.layers[l].out_dim();
    p.gamma = Vector::Ones(w);
    p.beta = Vector::Zero(w);
    p.mu = Vector::Zero(w);
    p.sigma = Vector::Ones(w);
    p.eps = eps;
    net.bn[l] = std::move(p);
  }
}

struct TrainResult {
  LadderNetwork net;
  std::vector<double> train_loss;
  std::vector<double> val_loss;  // empty when no validation set
};

/// Minibatch training, fully deterministic for a fixed seed. Per-epoch
/// losses are inference-mode full passes. A non-finite loss aborts.
inline TrainResult train_model(LadderNetwork net, const Dataset& train_data, const Dataset* val_data,
                               const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (train_data.size() < 1) throw DataError("train_model: empty dataset");
  const LossKind kind = loss_kind_for(net.head);
  if ((kind == LossKind::mse) != (train_data.task == Task::regression))
    throw ConfigError("train_model: head does not match dataset task");
  if (net.input_dim != train_data.dim()) throw ShapeError("train_model: feature width mismatch");
  const Index want_out = kind == LossKind::softmax_ce ? train_data.num_classes() : 1;
  if (net.output_dim() != want_out) throw ShapeError("train_model: output width mismatch");

  if (cfg.bn_enabled && !net.has_bn()) attach_bn(net);
  if (!cfg.bn_enabled) net.bn.clear();
  net.dropout_rate = cfg.dropout_rate;

  OptimizerState opt = OptimizerState::init(net);
  Rng shuffle_rng = Rng(cfg.seed).split(1);
  Rng dropout_rng = Rng(cfg.seed).split(2);

  std::vector<int> order(static_cast<std::size_t>(train_data.size()));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      // BN train mode needs >= 2 samples; absorb a trailing singleton.
      if (cfg.bn_enabled && end + 1 == order.size()) end = order.size();
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      start = end;
      detail::BatchResult br = detail::batch_gradients(
          net, train_data, batch, kind, cfg.bn_enabled ? BnMode::train : BnMode::infer,
          cfg.bn_momentum, cfg.dropout_rate > 0 ? &dropout_rng : nullptr);
      if (!std::isfinite(br.loss))
        throw NumericError("train_model: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           "; consider batch normalization or a smaller learning rate");
      optimizer_step(net, br.grads, opt, cfg);
    }
    result.train_loss.push_back(dataset_loss(net, train_data, kind));
    if (val_data && val_data->size() > 0) result.val_loss.push_back(dataset_loss(net, *val_data, kind));
  }
  result.net = std::move(net);
  return result;
}

}  // namespace lpnn
