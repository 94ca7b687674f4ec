#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "lpnn/network.hpp"

namespace lpnn {

// ---------------------------------------------------------------------------
// Input gradients and Lipschitz bounds

/// Exact Jacobian of h^L with respect to x via the layer recursion
///   J^l = diag(V^l x) W^l J^{l-1} + diag(W^l h^{l-1} + b^l) V^l,  J^0 = I.
/// Requires BN to be folded or absent.
inline Matrix input_jacobian(const LadderNetwork& net, const Vector& x) {
  if (net.has_bn()) throw ConfigError("input_jacobian: fold batch normalization first");
  if (x.size() != net.input_dim) throw ShapeError("input_jacobian: input length mismatch");
  Vector h = x;
  Matrix jac = Matrix::Identity(net.input_dim, net.input_dim);
  for (const LadderLayer& layer : net.layers) {
    Vector u = layer.w * h;
    if (layer.b) u += *layer.b;
    const Vector a = layer.v * x;
    jac = a.asDiagonal() * (layer.w * jac) + u.asDiagonal() * Matrix(layer.v);
    h = (u.array() * a.array()).matrix();
  }
  return jac;
}

/// Largest singular value. Full SVD up to width 512; above that, power
/// iteration on the Gram matrix (tol 1e-12, max 1e4 iterations).
inline double operator_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (!m.allFinite()) throw NumericError("operator_norm: non-finite entries");
  Eigen::MatrixXd a = m;  // column-major working copy
  if (std::max(a.rows(), a.cols()) <= 512)
    return Eigen::BDCSVD<Eigen::MatrixXd>(a).singularValues()(0);

  Rng rng(0x5ba7f2c3u);  // fixed seed: deterministic start vector
  Eigen::VectorXd v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double sigma = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double next = (a * v).norm();
    if (std::abs(next - sigma) <= 1e-12 * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

/// Worst-case bounds over the ball ||x|| <= R for every prefix of the
/// network: with P_l = prod_{k<=l} ||V^k|| ||W^k||,
///   ||h^l(x)||   <= P_l R^{l+1}
///   ||J h^l(x)|| <= (l+1) P_l R^l.
struct LipschitzReport {
  double radius = 0.0;
  std::vector<double> w_norms, v_norms;  // per layer
  std::vector<double> h_bounds, grad_bounds;
};

inline LipschitzReport lipschitz_bounds(const LadderNetwork& net, double radius) {
  if (radius <= 0) throw ConfigError("lipschitz_bounds: radius must be positive");
  if (net.has_intercepts() || net.has_bn())
    throw ConfigError("lipschitz_bounds: bounds require an intercept-free polynomial network");
  LipschitzReport report;
  report.radius = radius;
  double product = 1.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const double wn = operator_norm(net.layers[l].w);
    const double vn = operator_norm(net.layers[l].v);
    product *= wn * vn;
    const double deg = static_cast<double>(l) + 1.0;  // h^l has degree l+1
    report.w_norms.push_back(wn);
    report.v_norms.push_back(vn);
    report.h_bounds.push_back(product * std::pow(radius, deg + 1.0));
    report.grad_bounds.push_back((deg + 1.0) * product * std::pow(radius, deg));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Line restriction: h^L(x0 + t g) as a univariate polynomial per unit

/// Row i holds the coefficients of h^L_i(x0 + t g), highest order first:
/// column j is the coefficient of t^{degree - j}.
struct LineCoeffs {
  Matrix coeffs;  // d_L x (L+2)

  Index degree() const { return coeffs.cols() - 1; }
};

/// Exact coefficient extraction by the append-zero recursion
///   alpha(h^0) = [g, x0]
///   alpha(h^l) = [diag(V^l g) A, 0] + [0, diag(V^l x0) A],  A = W^l alpha(h^{l-1})
/// with intercepts entering A's constant column. Requires BN folded or absent.
inline LineCoeffs line_coeffs(const LadderNetwork& net, const Vector& x0, const Vector& g) {
  if (net.has_bn()) throw ConfigError("line_coeffs: fold batch normalization first");
  if (x0.size() != net.input_dim || g.size() != net.input_dim)
    throw ShapeError("line_coeffs: point/direction length mismatch");
  Matrix alpha(net.input_dim, 2);
  alpha.col(0) = g;
  alpha.col(1) = x0;
  for (const LadderLayer& layer : net.layers) {
    Matrix a = layer.w * alpha;
    if (layer.b) a.col(a.cols() - 1) += *layer.b;
    const Vector vg = layer.v * g;
    const Vector vx0 = layer.v * x0;
    Matrix next = Matrix::Zero(layer.out_dim(), a.cols() + 1);
    next.leftCols(a.cols()) += vg.asDiagonal() * a;
    next.rightCols(a.cols()) += vx0.asDiagonal() * a;
    alpha = std::move(next);
  }
  return {std::move(alpha)};
}

/// Horner evaluation of highest-order-first coefficients.
inline double poly_eval(const Eigen::Ref<const Vector>& coeffs, double t) {
  double acc = 0.0;
  for (Index j = 0; j < coeffs.size(); ++j) acc = acc * t + coeffs(j);
  return acc;
}

/// Derivative of a highest-order-first coefficient vector.
inline Vector poly_derivative(const Eigen::Ref<const Vector>& coeffs) {
  const Index n = coeffs.size() - 1;  // degree
  if (n <= 0) return Vector::Zero(1);
  Vector d(n);
  for (Index j = 0; j < n; ++j) d(j) = coeffs(j) * static_cast<double>(n - j);
  return d;
}

/// Real roots of a polynomial (highest order first) via companion-matrix
/// eigenvalues; roots with |imag| > 1e-8 (1 + |real|) are discarded.
inline std::vector<double> poly_real_roots(const Vector& coeffs) {
  // Strip leading coefficients that are zero relative to the largest one.
  const double scale = coeffs.size() ? coeffs.cwiseAbs().maxCoeff() : 0.0;
  Index first = 0;
  while (first < coeffs.size() && std::abs(coeffs(first)) <= 1e-14 * std::max(1.0, scale)) ++first;
  const Index degree = coeffs.size() - 1 - first;
  if (degree <= 0) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (Index i = 0; i + 1 < degree; ++i) companion(i + 1, i) = 1.0;
  for (Index i = 0; i < degree; ++i)
    companion(i, degree - 1) = -coeffs(coeffs.size() - 1 - i) / coeffs(first);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);

  std::vector<double> roots;
  for (Index i = 0; i < degree; ++i) {
    const std::complex<double> z = solver.eigenvalues()(i);
    if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

struct LineMinimum {
  double t = 0.0;
  double value = 0.0;
};

/// Global minimum of the scalar line polynomial p(t) = h^L(x0 + t g) over
/// [t_lo, t_hi]: candidates are the interval endpoints and the real roots of
/// p' inside it (companion-matrix eigenvalues, one Newton polish each).
inline LineMinimum minimize_along(const LadderNetwork& net, const Vector& x0, const Vector& g,
                                  double t_lo, double t_hi) {
  if (net.output_dim() != 1) throw ConfigError("minimize_along: scalar output required");
  if (!(t_lo < t_hi) || !std::isfinite(t_lo) || !std::isfinite(t_hi))
    throw ConfigError("minimize_along: empty or non-finite interval");
  const Vector p = line_coeffs(net, x0, g).coeffs.row(0).transpose();
  const Vector dp = poly_derivative(p);
  const Vector ddp = poly_derivative(dp);

  std::vector<double> candidates{t_lo, t_hi};
  const double edge = 1e-9 * (1.0 + std::max(std::abs(t_lo), std::abs(t_hi)));
  for (double r : poly_real_roots(dp)) {
    if (r < t_lo - edge || r > t_hi + edge) continue;
    const double curve = poly_eval(ddp, r);
    if (std::abs(curve) > 1e-300) r -= poly_eval(dp, r) / curve;  // Newton polish on p'
    candidates.push_back(std::clamp(r, t_lo, t_hi));
  }

  LineMinimum best{candidates[0], poly_eval(p, candidates[0])};
  for (double t : candidates) {
    const double value = poly_eval(p, t);
    if (!std::isfinite(value)) throw NumericError("minimize_along: non-finite polynomial value");
    if (value < best.value || (value == best.value && t < best.t)) best = {t, value};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Product-activation scatter

struct ScatterPoint {
  Index sample = 0;
  Index unit = 0;
  double u = 0.0;  // linear pre-activation (W h + b)_unit
  double h = 0.0;  // product activation u * (V x)_unit
};

/// Per-sample (u, h) pairs for the chosen units of one layer (0-based),
/// straight from the forward trace.
inline std::vector<ScatterPoint> activation_scatter(const LadderNetwork& net, const Matrix& x_rows,
                                                    Index layer, const std::vector<Index>& units) {
  if (layer < 0 || layer >= net.depth()) throw ConfigError("activation_scatter: layer out of range");
  for (Index unit : units)
    if (unit < 0 || unit >= net.layers[static_cast<std::size_t>(layer)].out_dim())
      throw ConfigError("activation_scatter: unit out of range");
  if (x_rows.cols() != net.input_dim) throw ShapeError("activation_scatter: input width mismatch");

  std::vector<ScatterPoint> points;
  points.reserve(static_cast<std::size_t>(x_rows.rows()) * units.size());
  for (Index s = 0; s < x_rows.rows(); ++s) {
    ActivationTrace trace;
    forward(net, x_rows.row(s).transpose(), &trace);
    const std::size_t l = static_cast<std::size_t>(layer);
    for (Index unit : units) points.push_back({s, unit, trace.u[l](unit), trace.h[l](unit)});
  }
  return points;
}

}  // namespace lpnn
