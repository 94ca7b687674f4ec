#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "lpnn/dataio.hpp"
#include "lpnn/train.hpp"

namespace lpnn {

// ---------------------------------------------------------------------------
// Synthetic regression datasets

/// x uniform on [-1,1]^2, y = scale * x1 * x2.
inline Dataset make_product_dataset(Index n, std::uint64_t seed, double scale = 1.0) {
  if (n < 1) throw ConfigError("make_product_dataset: n must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.task = Task::regression;
  ds.feature_names = {"x1", "x2"};
  ds.features.resize(n, 2);
  ds.targets_reg.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double x1 = 2.0 * rng.uniform() - 1.0;
    const double x2 = 2.0 * rng.uniform() - 1.0;
    ds.features(i, 0) = x1;
    ds.features(i, 1) = x2;
    ds.targets_reg(i) = scale * x1 * x2;
  }
  return ds;
}

/// x uniform on [-1,1]^5 with a fixed degree-3 polynomial target,
/// y = (x1 + 0.5 x2)(x3 x4 + 2 x5 + 0.3 x1 - 0.7).
/// The target factors as linear times quadratic, which a two-layer ladder
/// network expresses exactly: the output unit is itself such a product.
inline Dataset make_poly3_dataset(Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("make_poly3_dataset: n must be positive");
  Rng rng(seed);
  Dataset ds;
  ds.task = Task::regression;
  ds.feature_names = {"x1", "x2", "x3", "x4", "x5"};
  ds.features.resize(n, 5);
  ds.targets_reg.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 5; ++j) ds.features(i, j) = 2.0 * rng.uniform() - 1.0;
    const auto x = [&](Index j) { return ds.features(i, j - 1); };
    ds.targets_reg(i) = (x(1) + 0.5 * x(2)) * (x(3) * x(4) + 2.0 * x(5) + 0.3 * x(1) - 0.7);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// One-hidden-layer tanh baseline (not a ladder network)

/// y(x) = w2^T tanh(W1 x + b1) + b2.
struct TanhMlp {
  Matrix w1;
  Vector b1, w2;
  double b2 = 0.0;

  double predict(const Vector& x) const {
    return w2.dot((w1 * x + b1).array().tanh().matrix()) + b2;
  }
};

struct MlpTrainConfig {
  int hidden = 1;
  int epochs = 200;
  int batch_size = 1000;  // >= n means full batch
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

inline double mlp_rmse(const TanhMlp& mlp, const Matrix& x_rows, const Vector& y) {
  double ss = 0.0;
  for (Index i = 0; i < x_rows.rows(); ++i) {
    const double diff = mlp.predict(x_rows.row(i).transpose()) - y(i);
    ss += diff * diff;
  }
  return std::sqrt(ss / static_cast<double>(x_rows.rows()));
}

/// Adam on mean-squared error; unit-normal init for the weights, zero biases.
inline TanhMlp train_mlp(const Matrix& x_rows, const Vector& y, const MlpTrainConfig& cfg) {
  if (x_rows.rows() != y.size() || x_rows.rows() < 1) throw ShapeError("train_mlp: sample count mismatch");
  if (cfg.hidden < 1 || cfg.epochs < 0 || cfg.batch_size < 1 || cfg.learning_rate <= 0)
    throw ConfigError("train_mlp: invalid config");
  const Index n = x_rows.rows();
  const Index d = x_rows.cols();
  Rng rng(cfg.seed);
  TanhMlp mlp;
  mlp.w1 = rng.normal_matrix(cfg.hidden, d, 1.0);
  mlp.b1 = Vector::Zero(cfg.hidden);
  mlp.w2 = rng.normal_matrix(cfg.hidden, 1, 1.0).col(0);
  mlp.b2 = 0.0;

  Matrix m_w1 = Matrix::Zero(cfg.hidden, d), v_w1 = m_w1;
  Vector m_b1 = Vector::Zero(cfg.hidden), v_b1 = m_b1;
  Vector m_w2 = Vector::Zero(cfg.hidden), v_w2 = m_w2;
  Vector m_b2 = Vector::Zero(1), v_b2 = m_b2;
  long step = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = Rng(cfg.seed).split(1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Index bs = static_cast<Index>(end - start);
      Matrix xb(bs, d);
      Vector yb(bs);
      for (Index i = 0; i < bs; ++i) {
        xb.row(i) = x_rows.row(order[start + static_cast<std::size_t>(i)]);
        yb(i) = y(order[start + static_cast<std::size_t>(i)]);
      }
      Matrix z = xb * mlp.w1.transpose();
      z.array().rowwise() += mlp.b1.transpose().array();
      const Matrix t = z.array().tanh();
      const Vector pred = (t * mlp.w2).array() + mlp.b2;
      const Vector g = 2.0 / static_cast<double>(bs) * (pred - yb);
      const Vector g_w2 = t.transpose() * g;
      Vector g_b2(1);
      g_b2(0) = g.sum();
      Matrix dz = (g * mlp.w2.transpose()).array() * (1.0 - t.array().square());
      const Matrix g_w1 = dz.transpose() * xb;
      const Vector g_b1 = dz.colwise().sum().transpose();
      ++step;
      adam_step(mlp.w1, g_w1, m_w1, v_w1, step, cfg.learning_rate, 0.0);
      adam_step(mlp.b1, g_b1, m_b1, v_b1, step, cfg.learning_rate, 0.0);
      adam_step(mlp.w2, g_w2, m_w2, v_w2, step, cfg.learning_rate, 0.0);
      Vector b2v = Vector::Constant(1, mlp.b2);
      adam_step(b2v, g_b2, m_b2, v_b2, step, cfg.learning_rate, 0.0);
      mlp.b2 = b2v(0);
    }
  }
  return mlp;
}

// ---------------------------------------------------------------------------
// Product-approximation grid (tanh baseline vs. product/relu targets)

struct ProductApproxCell {
  std::string target;  // "product" or "relu"
  int hidden = 0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};

struct ProductApproxReport {
  std::vector<ProductApproxCell> cells;  // targets x hidden sizes
};

struct ProductApproxConfig {
  Index n = 1000;
  int runs = 10;
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.01;
  std::vector<int> hidden_sizes = {1, 2, 3, 4};
  std::uint64_t seed = 0;
};

/// Fits the tanh baseline to two targets on fresh draws of (x1, x2) uniform
/// on [-1,1]^2: the scaled product y = 4 x1 x2 (mean |y| is 1) and the
/// normalized ramp y = relu(0.5 x1 + 1.5 x2) / C with C the empirical mean
/// of the ramp, so mean |y| is 1 as well. Each cell aggregates `runs`
/// independently seeded draws and fits; RMSE is measured on the fitted sample.
inline ProductApproxReport product_approx_experiment(const ProductApproxConfig& cfg) {
  if (cfg.runs < 1) throw ConfigError("product_approx_experiment: runs must be positive");
  ProductApproxReport report;
  for (const std::string& target : {std::string("product"), std::string("relu")}) {
    for (int hidden : cfg.hidden_sizes) {
      std::vector<double> rmses;
      for (int run = 0; run < cfg.runs; ++run) {
        const std::uint64_t run_seed =
            Rng(cfg.seed).split(static_cast<std::uint64_t>(run) + 1).next_u64();
        Dataset base = make_product_dataset(cfg.n, run_seed, 4.0);
        Vector y = base.targets_reg;
        if (target == "relu") {
          Vector ramp(cfg.n);
          for (Index i = 0; i < cfg.n; ++i)
            ramp(i) = std::max(0.0, 0.5 * base.features(i, 0) + 1.5 * base.features(i, 1));
          const double c = ramp.mean();
          if (c <= 0) throw NumericError("product_approx_experiment: degenerate ramp normalizer");
          y = ramp / c;
        }
        MlpTrainConfig mcfg;
        mcfg.hidden = hidden;
        mcfg.epochs = cfg.epochs;
        mcfg.batch_size = cfg.batch_size;
        mcfg.learning_rate = cfg.learning_rate;
        mcfg.seed = run_seed ^ 0x9e3779b97f4a7c15ULL;
        const TanhMlp mlp = train_mlp(base.features, y, mcfg);
        rmses.push_back(mlp_rmse(mlp, base.features, y));
      }
      const double mean =
          std::accumulate(rmses.begin(), rmses.end(), 0.0) / static_cast<double>(rmses.size());
      double var = 0.0;
      for (double r : rmses) var += (r - mean) * (r - mean);
      var = rmses.size() > 1 ? var / static_cast<double>(rmses.size() - 1) : 0.0;
      report.cells.push_back({target, hidden, mean, std::sqrt(var)});
    }
  }
  return report;
}

}  // namespace lpnn
