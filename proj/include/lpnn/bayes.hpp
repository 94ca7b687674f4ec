#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "lpnn/network.hpp"

namespace lpnn {

/// Independent Gaussian prior over every W and V entry. The mean parameters
/// live in an intercept-free LadderNetwork; variances mirror its shapes.
/// The moment recursion relies on entrywise independence across and within
/// matrices, which this type enforces by construction.
struct GaussianWeightPrior {
  LadderNetwork mean;
  std::vector<Matrix> w_var, v_var;

  void validate() const {
    mean.validate();
    if (mean.has_intercepts())
      throw ConfigError("GaussianWeightPrior: intercept-free networks only");
    if (mean.has_bn()) throw ConfigError("GaussianWeightPrior: fold batch normalization first");
    if (w_var.size() != mean.layers.size() || v_var.size() != mean.layers.size())
      throw ShapeError("GaussianWeightPrior: variance list length mismatch");
    for (std::size_t l = 0; l < mean.layers.size(); ++l) {
      if (w_var[l].rows() != mean.layers[l].w.rows() || w_var[l].cols() != mean.layers[l].w.cols() ||
          v_var[l].rows() != mean.layers[l].v.rows() || v_var[l].cols() != mean.layers[l].v.cols())
        throw ShapeError("GaussianWeightPrior: variance shape mismatch at layer " + std::to_string(l));
      if ((w_var[l].array() < 0).any() || (v_var[l].array() < 0).any())
        throw ConfigError("GaussianWeightPrior: variances must be nonnegative");
    }
  }

  static GaussianWeightPrior isotropic(LadderNetwork mean_net, double variance) {
    if (variance < 0) throw ConfigError("GaussianWeightPrior: variance must be nonnegative");
    GaussianWeightPrior prior;
    prior.mean = std::move(mean_net);
    for (const LadderLayer& layer : prior.mean.layers) {
      prior.w_var.push_back(Matrix::Constant(layer.w.rows(), layer.w.cols(), variance));
      prior.v_var.push_back(Matrix::Constant(layer.v.rows(), layer.v.cols(), variance));
    }
    prior.validate();
    return prior;
  }
};

/// First moment: by multilinearity, E[h^L] is the mean network's output.
inline Vector output_mean(const GaussianWeightPrior& prior, const Vector& x) {
  prior.validate();
  return forward(prior.mean, x);
}

/// Raw second moment E[h^L (h^L)^T] by the layer recursion
///   S^l_ij = (x^T E[V_i^T V_j] x) tr(E[W_i^T W_j] S^{l-1}),  S^0 = x x^T,
/// where rows of W, V are independent Gaussians, so the cross-moment
/// matrices collapse to mean products plus a same-row diagonal correction:
///   x^T E[V_i^T V_j] x      = (Vbar x)_i (Vbar x)_j + [i==j] varV_i . (x.*x)
///   tr(E[W_i^T W_j] S)      = (Wbar S Wbar^T)_ij   + [i==j] varW_i . diag(S).
inline Matrix second_moment(const GaussianWeightPrior& prior, const Vector& x) {
  prior.validate();
  if (x.size() != prior.mean.input_dim) throw ShapeError("second_moment: input length mismatch");
  Matrix s = x * x.transpose();
  const Vector x_sq = x.array().square();
  for (std::size_t l = 0; l < prior.mean.layers.size(); ++l) {
    const LadderLayer& layer = prior.mean.layers[l];
    const Vector vx = layer.v * x;
    Matrix gram_v = vx * vx.transpose();
    gram_v.diagonal() += prior.v_var[l] * x_sq;
    Matrix gram_w = layer.w * s * layer.w.transpose();
    gram_w.diagonal() += prior.w_var[l] * s.diagonal();
    s = (gram_v.array() * gram_w.array()).matrix();
  }
  return 0.5 * (s + s.transpose());  // kill asymmetric round-off
}

struct MomentResult {
  Vector mu;      // E[h^L]
  Matrix sigma2;  // E[h^L (h^L)^T]
  Matrix cov;     // sigma2 - mu mu^T
};

inline MomentResult moments(const GaussianWeightPrior& prior, const Vector& x) {
  MomentResult r;
  r.mu = output_mean(prior, x);
  r.sigma2 = second_moment(prior, x);
  r.cov = r.sigma2 - r.mu * r.mu.transpose();
  return r;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

enum class PredictiveTask { regression, binary };

struct Predictive {
  PredictiveTask task = PredictiveTask::regression;
  Vector mean;  // output mean (both tasks)
  Matrix cov;   // regression: output covariance + noise_var * I
  double prob1 = std::numeric_limits<double>::quiet_NaN();  // binary: P(y=1|x)
};

/// Gaussian approximation N(mu, cov) of the output distribution, turned into
/// a predictive: regression adds observation noise; binary classification
/// returns Phi(mu / sqrt(var)) with variance clamped at zero (a point mass
/// degenerates to a hard 0/1 decision, 0.5 at mu == 0).
inline Predictive gaussian_predictive(const GaussianWeightPrior& prior, const Vector& x,
                                      PredictiveTask task, double noise_var = 0.0) {
  if (noise_var < 0) throw ConfigError("gaussian_predictive: noise_var must be nonnegative");
  const MomentResult m = moments(prior, x);
  Predictive p;
  p.task = task;
  p.mean = m.mu;
  if (task == PredictiveTask::regression) {
    p.cov = m.cov + noise_var * Matrix::Identity(m.mu.size(), m.mu.size());
    return p;
  }
  if (m.mu.size() != 1) throw ConfigError("gaussian_predictive: binary task needs a scalar output");
  const double var = std::max(0.0, m.cov(0, 0));
  p.cov = Matrix::Constant(1, 1, var);
  if (var == 0.0)
    p.prob1 = m.mu(0) > 0 ? 1.0 : (m.mu(0) < 0 ? 0.0 : 0.5);
  else
    p.prob1 = normal_cdf(m.mu(0) / std::sqrt(var));
  return p;
}

/// n forward passes with weights drawn entrywise from the prior; one row per
/// sample. Each sample uses its own split RNG stream derived from (seed, i),
/// so results do not depend on evaluation order.
inline Matrix mc_outputs(const GaussianWeightPrior& prior, const Vector& x, Index n,
                         std::uint64_t seed) {
  prior.validate();
  if (n < 1) throw ConfigError("mc_outputs: need at least one sample");
  if (x.size() != prior.mean.input_dim) throw ShapeError("mc_outputs: input length mismatch");
  Matrix out(n, prior.mean.output_dim());
  LadderNetwork draw = prior.mean;
  for (Index i = 0; i < n; ++i) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(i) + 1);
    for (std::size_t l = 0; l < draw.layers.size(); ++l) {
      const LadderLayer& mean_layer = prior.mean.layers[l];
      LadderLayer& layer = draw.layers[l];
      for (Index r = 0; r < layer.w.rows(); ++r)
        for (Index c = 0; c < layer.w.cols(); ++c)
          layer.w(r, c) = rng.normal(mean_layer.w(r, c), std::sqrt(prior.w_var[l](r, c)));
      for (Index r = 0; r < layer.v.rows(); ++r)
        for (Index c = 0; c < layer.v.cols(); ++c)
          layer.v(r, c) = rng.normal(mean_layer.v(r, c), std::sqrt(prior.v_var[l](r, c)));
    }
    out.row(i) = forward(draw, x).transpose();
  }
  return out;
}

}  // namespace lpnn
