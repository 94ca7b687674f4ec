#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpnn/analysis.hpp"
#include "lpnn/bayes.hpp"
#include "lpnn/compat.hpp"
#include "lpnn/experiment.hpp"
#include "lpnn/serialize.hpp"
#include "lpnn/train.hpp"

namespace lpnn::cmd {

namespace fs = std::filesystem;
using nlohmann::json;

/// Options shared by every subcommand.
struct CommonOpts {
  std::string config_path;               // empty: all defaults
  fs::path out = "out";
  std::optional<std::uint64_t> seed;     // overrides the config's seed
};

// ---------------------------------------------------------------------------
// Config and file helpers

inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    if (!j.is_object()) throw ConfigError("config must be a JSON object: " + path);
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& command) {
  for (const auto& item : j.items()) {
    if (allowed.count(item.key())) continue;
    std::string msg = "unknown config key '" + item.key() + "' for " + command + "; allowed keys:";
    for (const std::string& k : allowed) msg += " " + k;
    throw ConfigError(msg);
  }
}

template <typename T>
T get_opt(const json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

inline std::string get_required(const json& j, const std::string& key, const std::string& command) {
  if (!j.contains(key)) throw ConfigError(command + ": config key '" + key + "' is required");
  try {
    return j.at(key).get<std::string>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' must be a string");
  }
}

inline Vector vector_opt(const json& j, const std::string& key, const Vector& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_array()) throw ConfigError("config key '" + key + "' must be an array of numbers");
  Vector v(j.at(key).size());
  for (std::size_t i = 0; i < j.at(key).size(); ++i) {
    if (!j.at(key)[i].is_number()) throw ConfigError("config key '" + key + "' must be numeric");
    v(static_cast<Index>(i)) = j.at(key)[i].get<double>();
  }
  return v;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline void ensure_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Shared pieces

inline Task task_from_string(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "binary") return Task::binary;
  if (s == "multiclass") return Task::multiclass;
  throw ConfigError("unknown task '" + s + "' (regression|binary|multiclass)");
}

inline std::string task_to_string(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
  }
  return "regression";
}

inline Task default_task_for(Head head) {
  switch (head) {
    case Head::binary_logit: return Task::binary;
    case Head::kclass_logits: return Task::multiclass;
    default: return Task::regression;
  }
}

inline Dataset load_dataset(const json& j, const std::string& command, Task default_task) {
  CsvSchema schema;
  schema.task = task_from_string(get_opt<std::string>(j, "task", task_to_string(default_task)));
  schema.target_column = get_opt<int>(j, "target_column", -1);
  schema.has_header = get_opt<bool>(j, "has_header", true);
  return load_csv(get_required(j, "data", command), schema);
}

/// Re-index a classification dataset onto the label order stored in a model.
inline void remap_class_labels(Dataset& ds, const std::vector<std::string>& model_labels) {
  if (ds.task == Task::regression || model_labels.empty()) return;
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < model_labels.size(); ++i) index[model_labels[i]] = static_cast<int>(i);
  for (std::size_t r = 0; r < ds.targets_class.size(); ++r) {
    const std::string& label = ds.class_labels[static_cast<std::size_t>(ds.targets_class[r])];
    auto it = index.find(label);
    if (it == index.end()) throw DataError("label '" + label + "' was not seen at training time");
    ds.targets_class[r] = it->second;
  }
  ds.class_labels = model_labels;
}

inline json metrics_for(const LadderNetwork& net, const Dataset& ds) {
  json m;
  if (ds.task == Task::regression) {
    m["rmse"] = rmse(net, ds);
    m["mse"] = dataset_loss(net, ds, LossKind::mse);
  } else {
    m["error_rate"] = error_rate(net, ds);
    m["mean_loss"] = dataset_loss(net, ds, loss_kind_for(net.head));
  }
  m["n"] = ds.size();
  return m;
}

// ---------------------------------------------------------------------------
// train

inline int run_train(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg,
             {"data", "task", "target_column", "has_header", "hidden_widths", "shrink", "intercepts",
              "init_scale", "optimizer", "learning_rate", "epochs", "batch_size", "l2_weight",
              "dropout_rate", "bn", "bn_momentum", "standardize", "split", "seed"},
             "train");
  const std::uint64_t seed = opts.seed.value_or(get_opt<std::uint64_t>(cfg, "seed", 0));

  Dataset full = load_dataset(cfg, "train", Task::regression);

  json split_cfg = cfg.contains("split") ? cfg.at("split") : json::object();
  check_keys(split_cfg, {"train", "val", "test"}, "train.split");
  const double f_train = get_opt<double>(split_cfg, "train", 0.7);
  const double f_val = get_opt<double>(split_cfg, "val", 0.0);
  const double f_test = get_opt<double>(split_cfg, "test", 0.3);
  const SplitIndices idx = split_indices(full.size(), f_train, f_val, f_test, Rng(seed).split(10).next_u64());
  if (idx.train.empty()) throw ConfigError("train: empty training split");
  Dataset train_set = subset(full, idx.train);
  Dataset val_set = subset(full, idx.val);
  Dataset test_set = subset(full, idx.test);

  const bool standardize = get_opt<bool>(cfg, "standardize", true);
  std::optional<Standardizer> stdizer;
  if (standardize) {
    stdizer = Standardizer::fit(train_set.features);
    train_set.features = stdizer->transform(train_set.features);
    if (val_set.size()) val_set.features = stdizer->transform(val_set.features);
    if (test_set.size()) test_set.features = stdizer->transform(test_set.features);
  }

  // Architecture: explicit hidden widths, or geometric shrinking widths
  // w_l = round(alpha^l (d0 - out) + out); the output layer is appended.
  const Index out_width = full.task == Task::multiclass ? full.num_classes() : 1;
  std::vector<Index> widths;
  if (cfg.contains("shrink")) {
    if (cfg.contains("hidden_widths")) throw ConfigError("train: give hidden_widths or shrink, not both");
    check_keys(cfg.at("shrink"), {"alpha", "depth"}, "train.shrink");
    const double alpha = get_opt<double>(cfg.at("shrink"), "alpha", 0.5);
    const int depth = get_opt<int>(cfg.at("shrink"), "depth", 2);
    if (alpha <= 0 || alpha > 1 || depth < 1) throw ConfigError("train: shrink needs alpha in (0,1], depth >= 1");
    for (int l = 1; l <= depth; ++l) {
      const double w = std::pow(alpha, l) * static_cast<double>(full.dim() - out_width) +
                       static_cast<double>(out_width);
      widths.push_back(std::max<Index>(1, static_cast<Index>(std::llround(w))));
    }
  } else {
    const std::vector<Index> hidden = get_opt<std::vector<Index>>(cfg, "hidden_widths", {4});
    for (Index w : hidden) {
      if (w < 1) throw ConfigError("train: hidden widths must be positive");
      widths.push_back(w);
    }
  }
  widths.push_back(out_width);

  Head head = Head::scalar_regression;
  if (full.task == Task::binary) head = Head::binary_logit;
  if (full.task == Task::multiclass) head = Head::kclass_logits;

  const bool intercepts = get_opt<bool>(cfg, "intercepts", true);
  const double init_scale = get_opt<double>(cfg, "init_scale", 0.5);
  LadderNetwork net = init_network(train_set.dim(), widths, head, intercepts, init_scale,
                                   Rng(seed).split(11).next_u64());

  TrainConfig tcfg;
  const std::string opt_name = get_opt<std::string>(cfg, "optimizer", "adam");
  if (opt_name == "adam")
    tcfg.optimizer = TrainConfig::Optimizer::adam;
  else if (opt_name == "sgd")
    tcfg.optimizer = TrainConfig::Optimizer::sgd;
  else
    throw ConfigError("train: optimizer must be adam or sgd");
  tcfg.learning_rate = get_opt<double>(cfg, "learning_rate", 1e-3);
  tcfg.epochs = get_opt<int>(cfg, "epochs", 200);
  tcfg.batch_size = get_opt<int>(cfg, "batch_size", 32);
  tcfg.l2_weight = get_opt<double>(cfg, "l2_weight", 0.0);
  tcfg.dropout_rate = get_opt<double>(cfg, "dropout_rate", 0.0);
  tcfg.bn_enabled = get_opt<bool>(cfg, "bn", false);
  tcfg.bn_momentum = get_opt<double>(cfg, "bn_momentum", 0.9);
  tcfg.seed = Rng(seed).split(12).next_u64();

  TrainResult result = train_model(std::move(net), train_set, val_set.size() ? &val_set : nullptr, tcfg);

  ensure_out(opts.out);
  ModelFile model;
  model.net = result.net;
  model.class_labels = full.class_labels;
  model.standardizer = stdizer;
  save_model(model, (opts.out / "model.json").string());

  std::ostringstream hist;
  hist << "epoch,train_loss" << (result.val_loss.empty() ? "" : ",val_loss") << "\n";
  for (std::size_t e = 0; e < result.train_loss.size(); ++e) {
    hist << (e + 1) << ',' << format_f64(result.train_loss[e]);
    if (!result.val_loss.empty()) hist << ',' << format_f64(result.val_loss[e]);
    hist << "\n";
  }
  write_text(opts.out / "loss_history.csv", hist.str());

  json metrics;
  metrics["train"] = metrics_for(result.net, train_set);
  if (val_set.size()) metrics["val"] = metrics_for(result.net, val_set);
  if (test_set.size()) metrics["test"] = metrics_for(result.net, test_set);
  if (!result.train_loss.empty()) metrics["final_train_loss"] = result.train_loss.back();
  write_json_file(opts.out / "metrics.json", metrics);
  write_json_file(opts.out / "split_indices.json", idx.to_json());

  json resolved = cfg;
  resolved["seed"] = seed;
  resolved["task"] = task_to_string(full.task);
  resolved["standardize"] = standardize;
  resolved["intercepts"] = intercepts;
  resolved["init_scale"] = init_scale;
  resolved["optimizer"] = opt_name;
  resolved["learning_rate"] = tcfg.learning_rate;
  resolved["epochs"] = tcfg.epochs;
  resolved["batch_size"] = tcfg.batch_size;
  resolved["l2_weight"] = tcfg.l2_weight;
  resolved["dropout_rate"] = tcfg.dropout_rate;
  resolved["bn"] = tcfg.bn_enabled;
  resolved["bn_momentum"] = tcfg.bn_momentum;
  resolved["split"] = {{"train", f_train}, {"val", f_val}, {"test", f_test}};
  resolved["widths"] = widths;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

inline int run_eval(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg, {"model", "data", "task", "target_column", "has_header", "seed"}, "eval");
  const ModelFile model = load_model(get_required(cfg, "model", "eval"));
  Dataset ds = load_dataset(cfg, "eval", default_task_for(model.net.head));
  remap_class_labels(ds, model.class_labels);
  ds.features = model.preprocess(ds.features);

  ensure_out(opts.out);
  write_json_file(opts.out / "metrics.json", metrics_for(model.net, ds));
  json resolved = cfg;
  resolved["task"] = task_to_string(ds.task);
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

inline int run_analyze(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg,
             {"model", "radii", "x0", "g", "t_lo", "t_hi", "curve_samples", "data", "task",
              "target_column", "has_header", "scatter_layer", "scatter_units", "seed"},
             "analyze");
  const ModelFile model = load_model(get_required(cfg, "model", "analyze"));
  const LadderNetwork net = fold_network(model.net);  // BN on the last layer errors here
  const Index d = net.input_dim;

  ensure_out(opts.out);
  json report;
  report["folded_bn"] = model.net.has_bn();

  const std::vector<double> radii = get_opt<std::vector<double>>(cfg, "radii", {1.0});
  if (net.has_intercepts()) {
    report["lipschitz_skipped"] = "network has intercepts; bounds cover intercept-free networks only";
  } else {
    json all = json::array();
    for (double r : radii) {
      const LipschitzReport lr = lipschitz_bounds(net, r);
      all.push_back({{"radius", lr.radius},
                     {"w_norms", lr.w_norms},
                     {"v_norms", lr.v_norms},
                     {"h_bounds", lr.h_bounds},
                     {"grad_bounds", lr.grad_bounds}});
    }
    report["lipschitz"] = all;
  }

  const Vector x0 = vector_opt(cfg, "x0", Vector::Zero(d));
  const Vector g = vector_opt(cfg, "g", Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))));
  if (x0.size() != d || g.size() != d) throw ConfigError("analyze: x0/g must have the model input width");
  const LineCoeffs line = line_coeffs(net, x0, g);

  std::ostringstream poly_csv;
  poly_csv << "unit";
  for (Index j = 0; j < line.coeffs.cols(); ++j) poly_csv << ",c" << (line.degree() - j);
  poly_csv << "\n";
  for (Index i = 0; i < line.coeffs.rows(); ++i) {
    poly_csv << i;
    for (Index j = 0; j < line.coeffs.cols(); ++j) poly_csv << ',' << format_f64(line.coeffs(i, j));
    poly_csv << "\n";
  }
  write_text(opts.out / "line_poly.csv", poly_csv.str());

  const double t_lo = get_opt<double>(cfg, "t_lo", -1.0);
  const double t_hi = get_opt<double>(cfg, "t_hi", 1.0);
  const int curve_samples = get_opt<int>(cfg, "curve_samples", 201);
  if (!(t_lo < t_hi) || curve_samples < 2) throw ConfigError("analyze: need t_lo < t_hi and curve_samples >= 2");
  std::ostringstream curve_csv;
  curve_csv << "t";
  for (Index i = 0; i < line.coeffs.rows(); ++i) curve_csv << ",h" << i;
  curve_csv << "\n";
  for (int s = 0; s < curve_samples; ++s) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(s) / static_cast<double>(curve_samples - 1);
    curve_csv << format_f64(t);
    for (Index i = 0; i < line.coeffs.rows(); ++i)
      curve_csv << ',' << format_f64(poly_eval(line.coeffs.row(i).transpose(), t));
    curve_csv << "\n";
  }
  write_text(opts.out / "line_curve.csv", curve_csv.str());

  if (net.output_dim() == 1) {
    const LineMinimum mn = minimize_along(net, x0, g, t_lo, t_hi);
    report["line_minimum"] = {{"t", mn.t}, {"value", mn.value}, {"t_lo", t_lo}, {"t_hi", t_hi}};
  }

  if (cfg.contains("data")) {
    Dataset ds = load_dataset(cfg, "analyze", default_task_for(model.net.head));
    const Matrix x_rows = model.preprocess(ds.features);
    const Index layer = get_opt<Index>(cfg, "scatter_layer", 0);
    std::vector<Index> units = get_opt<std::vector<Index>>(cfg, "scatter_units", {});
    if (units.empty() && layer >= 0 && layer < net.depth())
      for (Index u = 0; u < net.layers[static_cast<std::size_t>(layer)].out_dim(); ++u) units.push_back(u);
    std::ostringstream scatter_csv;
    scatter_csv << "sample,unit,u,h\n";
    for (const ScatterPoint& p : activation_scatter(net, x_rows, layer, units))
      scatter_csv << p.sample << ',' << p.unit << ',' << format_f64(p.u) << ',' << format_f64(p.h) << "\n";
    write_text(opts.out / "scatter.csv", scatter_csv.str());
  }

  write_json_file(opts.out / "lipschitz.json", report);
  json resolved = cfg;
  resolved["radii"] = radii;
  resolved["t_lo"] = t_lo;
  resolved["t_hi"] = t_hi;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// bayes

inline int run_bayes(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg, {"model", "x", "sigma2", "mc_samples", "bins", "noise_var", "task", "seed"}, "bayes");
  const ModelFile model = load_model(get_required(cfg, "model", "bayes"));
  if (model.net.has_bn() || model.net.has_intercepts())
    throw ConfigError("bayes: requires an intercept-free network without batch normalization");
  const Index d = model.net.input_dim;

  const std::uint64_t seed = opts.seed.value_or(get_opt<std::uint64_t>(cfg, "seed", 0));
  const Vector x_raw = vector_opt(cfg, "x", Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))));
  if (x_raw.size() != d) throw ConfigError("bayes: x must have the model input width");
  const Vector x = model.preprocess(x_raw);
  const std::vector<double> sigma2 = get_opt<std::vector<double>>(cfg, "sigma2", {0.05, 0.1});
  const Index mc_samples = get_opt<Index>(cfg, "mc_samples", 10000);
  const int bins = get_opt<int>(cfg, "bins", 50);
  const double noise_var = get_opt<double>(cfg, "noise_var", 0.0);
  const std::string task = get_opt<std::string>(cfg, "task", "regression");
  if (bins < 1 || mc_samples < 1) throw ConfigError("bayes: bins and mc_samples must be positive");

  ensure_out(opts.out);
  std::ostringstream moments_csv, hist_csv;
  moments_csv << "sigma2,unit,mu,var\n";
  hist_csv << "sigma2,bin_left,bin_right,count,density\n";
  json summary;

  for (std::size_t si = 0; si < sigma2.size(); ++si) {
    const double s2 = sigma2[si];
    const GaussianWeightPrior prior = GaussianWeightPrior::isotropic(model.net, s2);
    const MomentResult m = moments(prior, x);
    for (Index unit = 0; unit < m.mu.size(); ++unit)
      moments_csv << format_f64(s2) << ',' << unit << ',' << format_f64(m.mu(unit)) << ','
                  << format_f64(m.cov(unit, unit)) << "\n";

    json s;
    s["mu"] = m.mu(0);
    s["var"] = m.cov(0, 0);
    if (task == "binary") {
      const Predictive p = gaussian_predictive(prior, x, PredictiveTask::binary);
      s["prob1"] = p.prob1;
    } else {
      const Predictive p = gaussian_predictive(prior, x, PredictiveTask::regression, noise_var);
      s["predictive_var"] = p.cov(0, 0);
    }

    if (model.net.output_dim() == 1) {
      const std::uint64_t mc_seed = Rng(seed).split(si + 1).next_u64();
      const Matrix samples = mc_outputs(prior, x, mc_samples, mc_seed);
      const double lo = samples.col(0).minCoeff();
      const double hi = samples.col(0).maxCoeff();
      const double mu = m.mu(0);
      const double var = std::max(0.0, m.cov(0, 0));
      if (hi - lo < 1e-12) {
        hist_csv << format_f64(s2) << ',' << format_f64(lo) << ',' << format_f64(hi) << ','
                 << mc_samples << ",0\n";
      } else {
        const double width = (hi - lo) / static_cast<double>(bins);
        std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
        for (Index i = 0; i < samples.rows(); ++i) {
          int b = static_cast<int>((samples(i, 0) - lo) / width);
          b = std::min(std::max(b, 0), bins - 1);
          ++counts[static_cast<std::size_t>(b)];
        }
        for (int b = 0; b < bins; ++b) {
          const double left = lo + width * b;
          const double center = left + 0.5 * width;
          constexpr double two_pi = 6.283185307179586476925286766559;
          const double density =
              var > 0 ? std::exp(-0.5 * (center - mu) * (center - mu) / var) / std::sqrt(two_pi * var)
                      : 0.0;
          hist_csv << format_f64(s2) << ',' << format_f64(left) << ',' << format_f64(left + width)
                   << ',' << counts[static_cast<std::size_t>(b)] << ',' << format_f64(density) << "\n";
        }
      }
      s["mc_mean"] = samples.col(0).mean();
    }
    summary[format_f64(s2)] = s;
  }

  write_text(opts.out / "moments.csv", moments_csv.str());
  if (model.net.output_dim() == 1) write_text(opts.out / "histogram.csv", hist_csv.str());
  write_json_file(opts.out / "metrics.json", summary);
  json resolved = cfg;
  resolved["seed"] = seed;
  resolved["sigma2"] = sigma2;
  resolved["mc_samples"] = mc_samples;
  resolved["bins"] = bins;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// convert

inline int run_convert(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg, {"kind", "spec", "check_samples", "seed"}, "convert");
  const std::string kind = get_required(cfg, "kind", "convert");
  const std::string spec_path = get_required(cfg, "spec", "convert");
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) throw DataError("cannot open model spec: " + spec_path);
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw DataError("model spec parse error in " + spec_path + ": " + e.what());
  }

  LadderNetwork net;
  std::function<double(const Vector&)> direct;
  Index d = 0;
  if (kind == "poly_kernel") {
    check_keys(spec, {"pi", "p", "lambda", "m"}, "poly_kernel spec");
    KernelModel km;
    km.pi = vector_opt(spec, "pi", Vector());
    if (!spec.contains("p") || !spec.at("p").is_array() || spec.at("p").empty())
      throw ConfigError("poly_kernel spec: 'p' must be a nonempty array of rows");
    const std::size_t rows = spec.at("p").size();
    const std::size_t cols = spec.at("p")[0].size();
    km.p.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      if (spec.at("p")[r].size() != cols) throw ConfigError("poly_kernel spec: ragged 'p' rows");
      for (std::size_t c = 0; c < cols; ++c) km.p(static_cast<Index>(r), static_cast<Index>(c)) = spec.at("p")[r][c].get<double>();
    }
    km.lambda = get_opt<double>(spec, "lambda", 0.0);
    km.m = get_opt<int>(spec, "m", 1);
    net = from_poly_kernel(km);
    direct = [km](const Vector& x) { return km.evaluate(x); };
    d = km.dim();
  } else if (kind == "fm2") {
    check_keys(spec, {"w0", "w1", "factors"}, "fm2 spec");
    FM2Model fm;
    fm.w0 = get_opt<double>(spec, "w0", 0.0);
    fm.w1 = vector_opt(spec, "w1", Vector());
    if (!spec.contains("factors") || !spec.at("factors").is_array() || spec.at("factors").empty())
      throw ConfigError("fm2 spec: 'factors' must be a nonempty array of rows");
    const std::size_t rows = spec.at("factors").size();
    const std::size_t cols = spec.at("factors")[0].size();
    fm.factors.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      if (spec.at("factors")[r].size() != cols) throw ConfigError("fm2 spec: ragged 'factors' rows");
      for (std::size_t c = 0; c < cols; ++c)
        fm.factors(static_cast<Index>(r), static_cast<Index>(c)) = spec.at("factors")[r][c].get<double>();
    }
    net = from_fm2(fm);
    direct = [fm](const Vector& x) { return fm.evaluate(x); };
    d = fm.dim();
  } else {
    throw ConfigError("convert: kind must be poly_kernel or fm2");
  }

  // Spot-check the construction against the closed-form model.
  const std::uint64_t seed = opts.seed.value_or(get_opt<std::uint64_t>(cfg, "seed", 0));
  const int check_samples = get_opt<int>(cfg, "check_samples", 100);
  Rng rng(seed);
  double max_rel = 0.0;
  for (int s = 0; s < check_samples; ++s) {
    Vector x(d);
    for (Index i = 0; i < d; ++i) x(i) = rng.normal();
    Vector aug(d + 1);
    aug.head(d) = x;
    aug(d) = 1.0;
    const double got = forward(net, aug)(0);
    const double want = direct(x);
    max_rel = std::max(max_rel, std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)}));
  }

  ensure_out(opts.out);
  save_model(net, (opts.out / "model.json").string());
  write_json_file(opts.out / "metrics.json",
                  json{{"kind", kind}, {"max_rel_error", max_rel}, {"check_samples", check_samples}});
  json resolved = cfg;
  resolved["seed"] = seed;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// tt

inline int run_tt(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg, {"model", "check_samples", "seed"}, "tt");
  const ModelFile model = load_model(get_required(cfg, "model", "tt"));
  const std::vector<TTCore> cores = to_tensor_train(model.net);

  std::ostringstream os;
  os << "{\n  \"format\": \"lpnn-tt\",\n  \"input_dim\": " << model.net.input_dim << ",\n  \"cores\": [\n";
  for (std::size_t c = 0; c < cores.size(); ++c) {
    os << "    {\"dims\": [" << cores[c].di << ", " << cores[c].dn << ", " << cores[c].dj << "], \"data\": ";
    detail::write_f64_array(os, cores[c].g.data(), static_cast<Index>(cores[c].g.size()));
    os << '}' << (c + 1 < cores.size() ? "," : "") << '\n';
  }
  os << "  ]\n}\n";

  const std::uint64_t seed = opts.seed.value_or(get_opt<std::uint64_t>(cfg, "seed", 0));
  const int check_samples = get_opt<int>(cfg, "check_samples", 20);
  Rng rng(seed);
  double max_rel = 0.0;
  for (int s = 0; s < check_samples; ++s) {
    Vector x(model.net.input_dim);
    for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const Vector a = tt_contract(cores, x);
    const Vector b = forward(model.net, x);
    max_rel = std::max(max_rel, (a - b).cwiseAbs().maxCoeff() /
                                    std::max(1.0, b.cwiseAbs().maxCoeff()));
  }

  ensure_out(opts.out);
  write_text(opts.out / "tt_cores.json", os.str());
  write_json_file(opts.out / "metrics.json",
                  json{{"max_rel_error", max_rel}, {"check_samples", check_samples},
                       {"num_cores", cores.size()}});
  json resolved = cfg;
  resolved["seed"] = seed;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

// ---------------------------------------------------------------------------
// experiment product-approx

inline int run_product_approx(const CommonOpts& opts) {
  const json cfg = load_config(opts.config_path);
  check_keys(cfg, {"n", "runs", "epochs", "batch_size", "learning_rate", "hidden_sizes", "seed"},
             "experiment product-approx");
  ProductApproxConfig pcfg;
  pcfg.n = get_opt<Index>(cfg, "n", pcfg.n);
  pcfg.runs = get_opt<int>(cfg, "runs", pcfg.runs);
  pcfg.epochs = get_opt<int>(cfg, "epochs", pcfg.epochs);
  pcfg.batch_size = get_opt<int>(cfg, "batch_size", pcfg.batch_size);
  pcfg.learning_rate = get_opt<double>(cfg, "learning_rate", pcfg.learning_rate);
  pcfg.hidden_sizes = get_opt<std::vector<int>>(cfg, "hidden_sizes", pcfg.hidden_sizes);
  pcfg.seed = opts.seed.value_or(get_opt<std::uint64_t>(cfg, "seed", 0));

  const ProductApproxReport report = product_approx_experiment(pcfg);
  ensure_out(opts.out);
  std::ostringstream csv;
  csv << "target,hidden_units,mean_rmse,std_rmse\n";
  for (const ProductApproxCell& cell : report.cells)
    csv << cell.target << ',' << cell.hidden << ',' << format_f64(cell.mean_rmse) << ','
        << format_f64(cell.std_rmse) << "\n";
  write_text(opts.out / "table1.csv", csv.str());

  json resolved;
  resolved["n"] = pcfg.n;
  resolved["runs"] = pcfg.runs;
  resolved["epochs"] = pcfg.epochs;
  resolved["batch_size"] = pcfg.batch_size;
  resolved["learning_rate"] = pcfg.learning_rate;
  resolved["hidden_sizes"] = pcfg.hidden_sizes;
  resolved["seed"] = pcfg.seed;
  write_json_file(opts.out / "config.json", resolved);
  return 0;
}

}  // namespace lpnn::cmd
