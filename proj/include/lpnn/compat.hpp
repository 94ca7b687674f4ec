#pragma once

#include <vector>

#include "lpnn/network.hpp"

namespace lpnn {

// ---------------------------------------------------------------------------
// Source models

/// Weighted sum of polynomial kernels: y(x) = sum_k pi_k (lambda + p_k^T x)^m.
struct KernelModel {
  Vector pi;      // K weights
  Matrix p;       // K x d kernel points
  double lambda = 0.0;
  int m = 1;      // kernel degree

  Index num_kernels() const { return p.rows(); }
  Index dim() const { return p.cols(); }

  void validate() const {
    if (m < 1) throw ConfigError("KernelModel: degree m must be at least 1");
    if (p.rows() < 1 || p.cols() < 1) throw ConfigError("KernelModel: need K >= 1, d >= 1");
    if (pi.size() != p.rows()) throw ShapeError("KernelModel: weight count mismatch");
    require_finite(p, "KernelModel.p");
    require_finite(pi, "KernelModel.pi");
  }

  double evaluate(const Vector& x) const {
    if (x.size() != dim()) throw ShapeError("KernelModel: input length mismatch");
    double y = 0.0;
    for (Index k = 0; k < num_kernels(); ++k)
      y += pi(k) * std::pow(lambda + p.row(k).dot(x), static_cast<double>(m));
    return y;
  }
};

/// Second-order factorization machine:
/// y(x) = w0 + w1^T x + sum_{i<j} v_i^T v_j x_i x_j, v_i = factors row i.
struct FM2Model {
  double w0 = 0.0;
  Vector w1;       // d
  Matrix factors;  // d x r

  Index dim() const { return factors.rows(); }
  Index rank() const { return factors.cols(); }

  void validate() const {
    if (factors.rows() < 1 || factors.cols() < 1) throw ConfigError("FM2Model: need d >= 1, r >= 1");
    if (w1.size() != factors.rows()) throw ShapeError("FM2Model: linear weight length mismatch");
    require_finite(factors, "FM2Model.factors");
    require_finite(w1, "FM2Model.w1");
  }

  double evaluate(const Vector& x) const {
    if (x.size() != dim()) throw ShapeError("FM2Model: input length mismatch");
    double y = w0 + w1.dot(x);
    for (Index i = 0; i < dim(); ++i)
      for (Index j = i + 1; j < dim(); ++j)
        y += factors.row(i).dot(factors.row(j)) * x(i) * x(j);
    return y;
  }
};

// ---------------------------------------------------------------------------
// Polynomial kernels -> ladder network

/// Builds a network over the augmented input [x, 1] whose output equals the
/// kernel sum whenever the last coordinate is 1. Layer 1 squares every
/// (lambda + p_k^T x) in parallel, layers 2..m-1 raise the power by one each,
/// and the final layer takes the pi-weighted sum times the appended 1.
/// Total depth m, so the augmented-input polynomial has degree m + 1.
inline LadderNetwork from_poly_kernel(const KernelModel& model) {
  model.validate();
  const Index k = model.num_kernels();
  const Index d = model.dim();
  Matrix affine(k, d + 1);  // rows [p_k^T, lambda]
  affine.leftCols(d) = model.p;
  affine.col(d).setConstant(model.lambda);
  Matrix pick_one = Matrix::Zero(1, d + 1);  // selects the appended 1
  pick_one(0, d) = 1.0;

  LadderNetwork net;
  net.input_dim = d + 1;
  net.head = Head::raw;
  if (model.m == 1) {
    // Single layer: W carries the pre-summed kernel, V picks the 1.
    LadderLayer layer;
    layer.w = model.pi.transpose() * affine;
    layer.v = pick_one;
    net.layers.push_back(std::move(layer));
    net.validate();
    return net;
  }
  LadderLayer first;
  first.w = affine;
  first.v = affine;
  net.layers.push_back(std::move(first));
  for (int l = 2; l <= model.m - 1; ++l) {
    LadderLayer mid;
    mid.w = Matrix::Identity(k, k);
    mid.v = affine;
    net.layers.push_back(std::move(mid));
  }
  LadderLayer sum;
  sum.w = model.pi.transpose();
  sum.v = pick_one;
  net.layers.push_back(std::move(sum));
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------
// Second-order FM -> ladder network

/// Two layers over the augmented input [x, 1]. Layer 1 stacks three blocks:
/// rank scores (f_k^T x)^2, squared features x_i^2, and the affine part
/// (w1^T x + w0) * 1. Layer 2 combines them as
///   1/2 [ sum_k (f_k^T x)^2 - sum_i ||v_i||^2 x_i^2 ] + w0 + w1^T x,
/// the classic rewrite of the i<j pairwise sum.
inline LadderNetwork from_fm2(const FM2Model& model) {
  model.validate();
  const Index d = model.dim();
  const Index r = model.rank();
  const Matrix f = model.factors.transpose();  // r x d

  LadderLayer first;
  first.w = Matrix::Zero(r + d + 1, d + 1);
  first.w.topLeftCorner(r, d) = f;
  first.w.block(r, 0, d, d) = Matrix::Identity(d, d);
  first.w.row(r + d).head(d) = model.w1.transpose();
  first.w(r + d, d) = model.w0;
  first.v = first.w;
  first.v.row(r + d).setZero();
  first.v(r + d, d) = 1.0;

  LadderLayer second;
  second.w = Matrix::Zero(1, r + d + 1);
  second.w.row(0).head(r).setConstant(0.5);
  second.w.row(0).segment(r, d) = -0.5 * model.factors.rowwise().squaredNorm().transpose();
  second.w(0, r + d) = 1.0;
  second.v = Matrix::Zero(1, d + 1);
  second.v(0, d) = 1.0;

  LadderNetwork net;
  net.input_dim = d + 1;
  net.head = Head::raw;
  net.layers.push_back(std::move(first));
  net.layers.push_back(std::move(second));
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------
// Ladder network -> tensor train

/// Dense three-way core indexed (i_l, n, i_{l-1}), flat row-major storage.
struct TTCore {
  Index di = 0, dn = 0, dj = 0;
  std::vector<double> g;

  static TTCore zeros(Index di, Index dn, Index dj) {
    TTCore c;
    c.di = di;
    c.dn = dn;
    c.dj = dj;
    c.g.assign(static_cast<std::size_t>(di * dn * dj), 0.0);
    return c;
  }

  double& at(Index i, Index n, Index j) { return g[static_cast<std::size_t>((i * dn + n) * dj + j)]; }
  double at(Index i, Index n, Index j) const {
    return g[static_cast<std::size_t>((i * dn + n) * dj + j)];
  }

  /// 2-mode product with x: M(i, j) = sum_n G(i, n, j) x_n.
  Matrix mode2(const Vector& x) const {
    if (x.size() != dn) throw ShapeError("TTCore: contraction length mismatch");
    Matrix m = Matrix::Zero(di, dj);
    for (Index i = 0; i < di; ++i)
      for (Index n = 0; n < dn; ++n)
        for (Index j = 0; j < dj; ++j) m(i, j) += at(i, n, j) * x(n);
    return m;
  }
};

/// Cores G^0..G^L with G^0(:,:,0) = I and, for l >= 1,
/// G^l(i, n, j) = W^l(i, j) V^l(i, n), so that the chain of 2-mode products
/// with x collapses right-to-left to h^L.
inline std::vector<TTCore> to_tensor_train(const LadderNetwork& net) {
  net.validate();
  if (net.has_intercepts() || net.has_bn())
    throw ConfigError("to_tensor_train: intercept-free polynomial network required (fold/strip first)");
  std::vector<TTCore> cores;
  TTCore base = TTCore::zeros(net.input_dim, net.input_dim, 1);
  for (Index i = 0; i < net.input_dim; ++i) base.at(i, i, 0) = 1.0;
  cores.push_back(std::move(base));
  for (const LadderLayer& layer : net.layers) {
    TTCore core = TTCore::zeros(layer.out_dim(), net.input_dim, layer.in_dim());
    for (Index i = 0; i < core.di; ++i)
      for (Index n = 0; n < core.dn; ++n)
        for (Index j = 0; j < core.dj; ++j) core.at(i, n, j) = layer.w(i, j) * layer.v(i, n);
    cores.push_back(std::move(core));
  }
  return cores;
}

/// Evaluates the core chain: h = (G^L x_2 x) ... (G^1 x_2 x) (G^0 x_2 x).
inline Vector tt_contract(const std::vector<TTCore>& cores, const Vector& x) {
  if (cores.empty()) throw ShapeError("tt_contract: empty core chain");
  if (cores.front().dj != 1) throw ShapeError("tt_contract: first core must have unit inner dimension");
  Matrix acc = cores.front().mode2(x);
  for (std::size_t l = 1; l < cores.size(); ++l) {
    if (cores[l].dj != acc.rows()) throw ShapeError("tt_contract: chain dimension mismatch");
    acc = cores[l].mode2(x) * acc;
  }
  return acc.col(0);
}

}  // namespace lpnn
