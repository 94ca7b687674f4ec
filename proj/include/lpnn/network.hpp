#pragma once

#include <optional>
#include <vector>

#include "lpnn/types.hpp"

namespace lpnn {

/// One ladder layer: h = (W h_prev + b) .* (V x).
/// W maps the previous layer, V maps the raw network input, so v.cols()
/// equals the network input dimension for every layer.
struct LadderLayer {
  Matrix w;                 // d_out x d_in
  Matrix v;                 // d_out x d_0
  std::optional<Vector> b;  // d_out intercept on the W branch

  Index out_dim() const { return w.rows(); }
  Index in_dim() const { return w.cols(); }
  Index input_dim() const { return v.cols(); }

  void validate() const {
    if (w.rows() != v.rows()) throw ShapeError("LadderLayer: w and v row counts differ");
    if (b && b->size() != w.rows()) throw ShapeError("LadderLayer: intercept length mismatch");
    if (!w.allFinite() || !v.allFinite() || (b && !b->allFinite()))
      throw NumericError("LadderLayer: non-finite weights");
  }
};

/// Frozen batch-norm statistics and affine parameters for one layer.
/// The normalization divides by (sigma + eps), not sqrt(var + eps).
struct BatchNormParams {
  Vector gamma;
  Vector beta;
  Vector mu;     // running mean
  Vector sigma;  // running std
  double eps = 1e-5;

  Index width() const { return gamma.size(); }

  void validate() const {
    const Index n = gamma.size();
    if (beta.size() != n || mu.size() != n || sigma.size() != n)
      throw ShapeError("BatchNormParams: vector lengths differ");
    if (eps <= 0) throw ConfigError("BatchNormParams: eps must be positive");
    if ((sigma.array() < 0).any()) throw ConfigError("BatchNormParams: sigma must be nonnegative");
  }

  Vector scale() const { return gamma.array() / (sigma.array() + eps); }
  Vector shift() const { return beta.array() - gamma.array() * mu.array() / (sigma.array() + eps); }

  // Inference transform, elementwise gamma*(h-mu)/(sigma+eps)+beta.
  Vector apply(const Vector& h) const {
    return (gamma.array() * (h.array() - mu.array()) / (sigma.array() + eps) + beta.array()).matrix();
  }
};

enum class Head { raw, scalar_regression, binary_logit, kclass_logits };

inline const char* head_name(Head h) {
  switch (h) {
    case Head::raw: return "raw";
    case Head::scalar_regression: return "scalar_regression";
    case Head::binary_logit: return "binary_logit";
    case Head::kclass_logits: return "kclass_logits";
  }
  return "raw";
}

inline Head head_from_name(const std::string& s) {
  if (s == "raw") return Head::raw;
  if (s == "scalar_regression") return Head::scalar_regression;
  if (s == "binary_logit") return Head::binary_logit;
  if (s == "kclass_logits") return Head::kclass_logits;
  throw ConfigError("unknown head: " + s);
}

/// A ladder polynomial network. With L layers and no intercepts or BN the
/// network function is a homogeneous polynomial of degree L+1 in x.
struct LadderNetwork {
  std::vector<LadderLayer> layers;
  Index input_dim = 0;
  Head head = Head::raw;
  std::vector<std::optional<BatchNormParams>> bn;  // empty, or one slot per layer
  double dropout_rate = 0.0;                       // training-time only

  Index depth() const { return static_cast<Index>(layers.size()); }
  Index output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }

  bool has_intercepts() const {
    for (const auto& l : layers)
      if (l.b) return true;
    return false;
  }

  bool has_bn() const {
    for (const auto& p : bn)
      if (p) return true;
    return false;
  }

  const BatchNormParams* bn_at(std::size_t layer) const {
    if (layer < bn.size() && bn[layer]) return &*bn[layer];
    return nullptr;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("LadderNetwork: no layers");
    if (input_dim <= 0) throw ShapeError("LadderNetwork: input_dim must be positive");
    if (!bn.empty() && bn.size() != layers.size())
      throw ShapeError("LadderNetwork: bn slot count must match layer count");
    Index prev = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].validate();
      if (layers[l].in_dim() != prev) throw ShapeError("LadderNetwork: layer width chain broken");
      if (layers[l].input_dim() != input_dim)
        throw ShapeError("LadderNetwork: v must map the raw input of dimension d_0");
      if (!bn.empty() && bn[l]) {
        bn[l]->validate();
        if (bn[l]->width() != layers[l].out_dim())
          throw ShapeError("LadderNetwork: bn width mismatch at layer");
      }
      prev = layers[l].out_dim();
    }
    if (dropout_rate < 0 || dropout_rate >= 1)
      throw ConfigError("LadderNetwork: dropout_rate must be in [0,1)");
    if (head == Head::scalar_regression && output_dim() != 1)
      throw ShapeError("LadderNetwork: scalar_regression head needs one output");
    if (head == Head::binary_logit && output_dim() != 1)
      throw ShapeError("LadderNetwork: binary_logit head needs one output");
  }
};

/// Per-layer record of the product activation: u = W h_prev + b going in,
/// h = u .* (V x) coming out (before any batch norm).
struct ActivationTrace {
  std::vector<Vector> u;
  std::vector<Vector> h;
};

inline Vector layer_forward(const LadderLayer& layer, const Vector& h_prev, const Vector& x) {
  if (h_prev.size() != layer.in_dim()) throw ShapeError("layer_forward: h_prev length mismatch");
  if (x.size() != layer.input_dim()) throw ShapeError("layer_forward: x length mismatch");
  require_finite(h_prev, "layer_forward h_prev");
  require_finite(x, "layer_forward x");
  Vector u = layer.w * h_prev;
  if (layer.b) u += *layer.b;
  return (u.array() * (layer.v * x).array()).matrix();
}

/// Inference forward pass. BN layers, when present, use their frozen running
/// statistics; dropout has no effect at inference. The trace records each
/// layer's pre-product input and post-product response.
inline Vector forward(const LadderNetwork& net, const Vector& x, ActivationTrace* trace = nullptr) {
  if (x.size() != net.input_dim) throw ShapeError("forward: input length mismatch");
  require_finite(x, "forward x");
  if (trace) {
    trace->u.clear();
    trace->h.clear();
  }
  Vector h = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LadderLayer& layer = net.layers[l];
    Vector u = layer.w * h;
    if (layer.b) u += *layer.b;
    Vector act = (u.array() * (layer.v * x).array()).matrix();
    if (trace) {
      trace->u.push_back(u);
      trace->h.push_back(act);
    }
    if (const BatchNormParams* p = net.bn_at(l))
      h = p->apply(act);
    else
      h = std::move(act);
  }
  return h;
}

/// Row-wise forward; identical to looping forward over rows.
inline Matrix forward_batch(const LadderNetwork& net, const Matrix& x_rows) {
  if (x_rows.cols() != net.input_dim) throw ShapeError("forward_batch: column count mismatch");
  Matrix out(x_rows.rows(), net.output_dim());
  for (Index i = 0; i < x_rows.rows(); ++i) out.row(i) = forward(net, x_rows.row(i).transpose()).transpose();
  return out;
}

}  // namespace lpnn
