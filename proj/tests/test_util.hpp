#pragma once

// Shared test helpers. The oracles here are deliberately independent of the
// library's linear-algebra paths: plain scalar loops, finite differences,
// Vandermonde fits, grid searches, and Monte Carlo.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lpnn/network.hpp"
#include "lpnn/train.hpp"

namespace test_util {

using lpnn::Index;
using lpnn::LadderLayer;
using lpnn::LadderNetwork;
using lpnn::Matrix;
using lpnn::Rng;
using lpnn::Vector;

inline LadderNetwork random_net(Rng& rng, Index input_dim, const std::vector<Index>& widths,
                                bool intercepts, double scale = 0.6) {
  LadderNetwork net;
  net.input_dim = input_dim;
  Index prev = input_dim;
  for (Index w : widths) {
    LadderLayer layer;
    layer.w = rng.normal_matrix(w, prev, scale / std::sqrt(static_cast<double>(prev)));
    layer.v = rng.normal_matrix(w, input_dim, scale / std::sqrt(static_cast<double>(input_dim)));
    if (intercepts) {
      layer.b = Vector(w);
      for (Index i = 0; i < w; ++i) (*layer.b)(i) = rng.normal(0.0, 0.3);
    }
    net.layers.push_back(std::move(layer));
    prev = w;
  }
  net.validate();
  return net;
}

inline std::vector<Index> random_widths(Rng& rng, int max_depth = 4, Index max_width = 8) {
  const int depth = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_depth)));
  std::vector<Index> widths;
  for (int l = 0; l < depth; ++l) widths.push_back(1 + static_cast<Index>(rng.below(max_width)));
  return widths;
}

inline Vector random_vector(Rng& rng, Index n, double scale = 1.0) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = rng.normal(0.0, scale);
  return x;
}

/// Reference forward pass written as bare scalar loops (no Eigen products).
inline Vector forward_loops(const LadderNetwork& net, const Vector& x) {
  std::vector<double> h(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) h[static_cast<std::size_t>(i)] = x(i);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LadderLayer& layer = net.layers[l];
    std::vector<double> next(static_cast<std::size_t>(layer.out_dim()));
    for (Index i = 0; i < layer.out_dim(); ++i) {
      double u = layer.b ? (*layer.b)(i) : 0.0;
      for (Index j = 0; j < layer.in_dim(); ++j) u += layer.w(i, j) * h[static_cast<std::size_t>(j)];
      double a = 0.0;
      for (Index n = 0; n < x.size(); ++n) a += layer.v(i, n) * x(n);
      double val = u * a;
      if (const lpnn::BatchNormParams* p = net.bn_at(l))
        val = p->gamma(i) * (val - p->mu(i)) / (p->sigma(i) + p->eps) + p->beta(i);
      next[static_cast<std::size_t>(i)] = val;
    }
    h = std::move(next);
  }
  Vector out(static_cast<Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i) out(static_cast<Index>(i)) = h[i];
  return out;
}

/// Iterate over every parameter slot of a network (W, V, b, BN gamma/beta)
/// as (pointer, matching gradient value) pairs via callbacks.
template <typename F>
void for_each_param(LadderNetwork& net, lpnn::GradientSet& grads, F&& f) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    LadderLayer& layer = net.layers[l];
    for (Index i = 0; i < layer.w.size(); ++i) f(layer.w.data()[i], grads.w[l].data()[i]);
    for (Index i = 0; i < layer.v.size(); ++i) f(layer.v.data()[i], grads.v[l].data()[i]);
    if (layer.b)
      for (Index i = 0; i < layer.b->size(); ++i) f((*layer.b)(i), grads.b[l](i));
    if (!net.bn.empty() && net.bn[l]) {
      for (Index i = 0; i < net.bn[l]->gamma.size(); ++i) f(net.bn[l]->gamma(i), grads.bn_gamma[l](i));
      for (Index i = 0; i < net.bn[l]->beta.size(); ++i) f(net.bn[l]->beta(i), grads.bn_beta[l](i));
    }
  }
}

/// Finite differences of an arbitrary scalar function of the network's
/// parameters, laid out to mirror GradientSet. Five-point Richardson stencil:
/// the larger step keeps round-off out of the small-gradient entries while
/// the fourth-order truncation stays negligible.
inline lpnn::GradientSet fd_gradients(LadderNetwork net, const std::function<double(const LadderNetwork&)>& f,
                                      double h = 1e-3) {
  lpnn::GradientSet fd = lpnn::GradientSet::zeros_like(net);
  for_each_param(net, fd, [&](double& param, double& slot) {
    const double saved = param;
    const auto at = [&](double delta) {
      param = saved + delta;
      return f(net);
    };
    slot = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
    param = saved;
  });
  return fd;
}

inline double max_rel_error(const lpnn::GradientSet& got, const lpnn::GradientSet& want,
                            double floor = 1e-6) {
  double worst = 0.0;
  auto acc = [&](const auto& a, const auto& b) {
    for (Index i = 0; i < a.size(); ++i) {
      const double denom = std::max({floor, std::abs(a.data()[i]), std::abs(b.data()[i])});
      worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
    }
  };
  for (std::size_t l = 0; l < got.w.size(); ++l) {
    acc(got.w[l], want.w[l]);
    acc(got.v[l], want.v[l]);
    if (got.b[l].size()) acc(got.b[l], want.b[l]);
    if (got.bn_gamma[l].size()) acc(got.bn_gamma[l], want.bn_gamma[l]);
    if (got.bn_beta[l].size()) acc(got.bn_beta[l], want.bn_beta[l]);
  }
  return worst;
}

inline double rel_diff(double a, double b, double floor = 1.0) {
  return std::abs(a - b) / std::max({floor, std::abs(a), std::abs(b)});
}

/// Least-squares polynomial fit through sampled points, highest order first.
/// Independent oracle for the alpha recursion.
inline Vector vandermonde_fit(const std::vector<double>& ts, const std::vector<double>& ys,
                              Index degree) {
  const Index n = static_cast<Index>(ts.size());
  Eigen::MatrixXd vand(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Index r = 0; r < n; ++r) {
    double p = 1.0;
    for (Index c = degree; c >= 0; --c) {
      vand(r, c) = p;
      p *= ts[static_cast<std::size_t>(r)];
    }
    rhs(r) = ys[static_cast<std::size_t>(r)];
  }
  return vand.colPivHouseholderQr().solve(rhs);
}

/// Uniform sample within the radius-R ball.
inline Vector sample_in_ball(Rng& rng, Index d, double radius) {
  Vector dir = random_vector(rng, d);
  const double norm = dir.norm();
  if (norm == 0) return Vector::Zero(d);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  return dir * (r / norm);
}

/// Kolmogorov-Smirnov distance between samples and a normal CDF.
inline double ks_to_normal(std::vector<double> samples, double mu, double sd) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double z = (samples[i] - mu) / sd;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    worst = std::max(worst, std::abs(cdf - static_cast<double>(i + 1) / n));
    worst = std::max(worst, std::abs(cdf - static_cast<double>(i) / n));
  }
  return worst;
}

}  // namespace test_util
