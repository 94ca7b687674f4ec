#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpnn/types.hpp"

namespace lpnn {

enum class Task { regression, binary, multiclass };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
  }
  return "regression";
}

inline Task task_from_name(const std::string& s) {
  if (s == "regression") return Task::regression;
  if (s == "binary") return Task::binary;
  if (s == "multiclass") return Task::multiclass;
  throw ConfigError("unknown task: " + s);
}

struct Dataset {
  Matrix features;                  // n x d
  Vector targets_reg;               // regression targets
  std::vector<int> targets_class;   // dense class indices
  Task task = Task::regression;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_labels;  // index -> original label

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  Index num_classes() const { return static_cast<Index>(class_labels.size()); }

  void validate() const {
    if (features.rows() < 1) throw DataError("Dataset: empty");
    if (!features.allFinite()) throw DataError("Dataset: non-finite feature");
    if (task == Task::regression) {
      if (targets_reg.size() != features.rows()) throw ShapeError("Dataset: target length mismatch");
      if (!targets_reg.allFinite()) throw DataError("Dataset: non-finite target");
    } else {
      if (static_cast<Index>(targets_class.size()) != features.rows())
        throw ShapeError("Dataset: target length mismatch");
      for (int c : targets_class)
        if (c < 0 || c >= num_classes()) throw DataError("Dataset: class index out of range");
    }
  }
};

struct CsvSchema {
  int target_column = -1;  // negative counts from the end; -1 is the last column
  bool has_header = true;
  Task task = Task::regression;
};

namespace detail {

inline bool parse_f64(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + s.size() && std::isfinite(out);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Comma-separated, '.' decimal, optional header, UTF-8. Class labels may be
/// arbitrary strings; they are mapped to dense indices in first-seen order.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::vector<std::string> header;
  std::string line;
  int line_no = 0;
  int ncols = -1;
  int target_col = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == EOF) break;
    std::vector<std::string> cells = detail::split_line(line);
    if (ncols < 0) {
      ncols = static_cast<int>(cells.size());
      if (ncols < 2) throw DataError(path + ":" + std::to_string(line_no) + ": need at least two columns");
      target_col = schema.target_column < 0 ? ncols + schema.target_column : schema.target_column;
      if (target_col < 0 || target_col >= ncols)
        throw DataError(path + ": target column " + std::to_string(schema.target_column) + " not present");
      if (schema.has_header) {
        header = cells;
        continue;
      }
    }
    if (static_cast<int>(cells.size()) != ncols)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(ncols) +
                      " columns, got " + std::to_string(cells.size()));
    std::vector<double> feat;
    feat.reserve(ncols - 1);
    for (int c = 0; c < ncols; ++c) {
      const std::string cell = detail::trim(cells[c]);
      if (c == target_col) {
        if (schema.task == Task::regression) {
          double y;
          if (!detail::parse_f64(cell, y))
            throw DataError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                            ": unparseable target '" + cell + "'");
          feat.push_back(y);  // placeholder slot, moved out below
        } else {
          raw_labels.push_back(cell);
          feat.push_back(0.0);
        }
      } else {
        double v;
        if (!detail::parse_f64(cell, v))
          throw DataError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                          ": unparseable numeric '" + cell + "'");
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  Dataset ds;
  ds.task = schema.task;
  const Index n = static_cast<Index>(rows.size());
  const Index d = ncols - 1;
  ds.features.resize(n, d);
  if (schema.task == Task::regression) ds.targets_reg.resize(n);

  for (Index i = 0; i < n; ++i) {
    Index fj = 0;
    for (int c = 0; c < ncols; ++c) {
      if (c == target_col) {
        if (schema.task == Task::regression) ds.targets_reg(i) = rows[i][c];
      } else {
        ds.features(i, fj++) = rows[i][c];
      }
    }
  }

  if (schema.task != Task::regression) {
    ds.targets_class.reserve(rows.size());
    for (const std::string& lab : raw_labels) {
      auto it = std::find(ds.class_labels.begin(), ds.class_labels.end(), lab);
      int idx;
      if (it == ds.class_labels.end()) {
        idx = static_cast<int>(ds.class_labels.size());
        ds.class_labels.push_back(lab);
      } else {
        idx = static_cast<int>(it - ds.class_labels.begin());
      }
      ds.targets_class.push_back(idx);
    }
    if (schema.task == Task::binary && ds.class_labels.size() > 2)
      throw DataError(path + ": binary task but " + std::to_string(ds.class_labels.size()) + " labels");
  }

  if (!header.empty()) {
    for (int c = 0; c < ncols; ++c)
      if (c != target_col) ds.feature_names.push_back(detail::trim(header[c]));
  }
  ds.validate();
  return ds;
}

/// Feature columns first, target last; floats at full 17-digit precision.
inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (Index j = 0; j < ds.dim(); ++j) {
    if (static_cast<std::size_t>(j) < ds.feature_names.size())
      out << ds.feature_names[j];
    else
      out << 'x' << (j + 1);
    out << ',';
  }
  out << "target\n";
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) out << format_f64(ds.features(i, j)) << ',';
    if (ds.task == Task::regression)
      out << format_f64(ds.targets_reg(i));
    else
      out << ds.class_labels[ds.targets_class[i]];
    out << '\n';
  }
}

inline Dataset subset(const Dataset& ds, const std::vector<int>& idx) {
  Dataset out;
  out.task = ds.task;
  out.feature_names = ds.feature_names;
  out.class_labels = ds.class_labels;
  out.features.resize(static_cast<Index>(idx.size()), ds.dim());
  if (ds.task == Task::regression) out.targets_reg.resize(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = ds.features.row(idx[i]);
    if (ds.task == Task::regression)
      out.targets_reg(static_cast<Index>(i)) = ds.targets_reg(idx[i]);
    else
      out.targets_class.push_back(ds.targets_class[idx[i]]);
  }
  return out;
}

struct SplitIndices {
  std::vector<int> train, val, test;

  nlohmann::json to_json() const {
    return nlohmann::json{{"train", train}, {"val", val}, {"test", test}};
  }
};

/// Deterministic shuffled split. Counts are rounded; with fractions summing
/// to 1 the partition is exhaustive.
inline SplitIndices split_indices(Index n, double f_train, double f_val, double f_test, std::uint64_t seed) {
  if (f_train < 0 || f_val < 0 || f_test < 0) throw ConfigError("split: fractions must be nonnegative");
  const double sum = f_train + f_val + f_test;
  if (sum > 1.0 + 1e-12) throw ConfigError("split: fractions sum above 1");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  auto count = [n](double f) { return static_cast<Index>(std::llround(f * static_cast<double>(n))); };
  Index n_train = std::min(count(f_train), n);
  Index n_val = std::min(count(f_val), n - n_train);
  Index n_test = (sum > 1.0 - 1e-12) ? n - n_train - n_val : count(f_test);
  n_test = std::max<Index>(0, std::min(n_test, n - n_train - n_val));

  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.begin() + n_train + n_val + n_test);
  return s;
}

struct DataSplit {
  Dataset train, val, test;
  SplitIndices indices;
};

inline DataSplit split(const Dataset& ds, double f_train, double f_val, double f_test, std::uint64_t seed) {
  SplitIndices idx = split_indices(ds.size(), f_train, f_val, f_test, seed);
  return DataSplit{subset(ds, idx.train), subset(ds, idx.val), subset(ds, idx.test), idx};
}

/// k disjoint validation folds of near-equal size; every index lands in
/// exactly one validation fold.
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("kfold: k must be at least 2");
  if (static_cast<Index>(k) > n) throw ConfigError("kfold: k larger than dataset");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::pair<std::vector<int>, std::vector<int>>> folds(k);
  for (int f = 0; f < k; ++f) {
    const std::size_t lo = static_cast<std::size_t>(f) * n / k;
    const std::size_t hi = static_cast<std::size_t>(f + 1) * n / k;
    auto& [train, val] = folds[f];
    for (std::size_t i = 0; i < order.size(); ++i)
      (i >= lo && i < hi ? val : train).push_back(order[i]);
  }
  return folds;
}

/// Per-feature affine scaler. Fit takes the training features only, so test
/// data is always transformed with training statistics.
struct Standardizer {
  Vector mean;
  Vector std;

  static Standardizer fit(const Matrix& x_train) {
    if (x_train.rows() < 1) throw DataError("Standardizer: empty fit data");
    Standardizer s;
    s.mean = x_train.colwise().mean();
    Vector var = (x_train.rowwise() - s.mean.transpose()).array().square().colwise().mean();
    s.std = var.array().sqrt().max(1e-12);
    return s;
  }

  Matrix transform(const Matrix& x) const {
    return ((x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
  }

  Vector transform(const Vector& x) const {
    return ((x - mean).array() / std.array()).matrix();
  }

  Matrix inverse(const Matrix& z) const {
    return ((z.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose());
  }
};

}  // namespace lpnn
