#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpnn/dataio.hpp"
#include "lpnn/network.hpp"

namespace lpnn {

constexpr int kModelFormatVersion = 1;

/// A model plus the preprocessing it was trained with: the label mapping
/// (empty for regression) and the feature standardizer, if any.
struct ModelFile {
  LadderNetwork net;
  std::vector<std::string> class_labels;
  std::optional<Standardizer> standardizer;

  Vector preprocess(const Vector& x) const {
    check_width(x.size());
    return standardizer ? standardizer->transform(x) : x;
  }
  Matrix preprocess(const Matrix& x) const {
    check_width(x.cols());
    return standardizer ? standardizer->transform(x) : x;
  }

  void check_width(Index got) const {
    if (got != net.input_dim)
      throw DataError("model expects " + std::to_string(net.input_dim) + " feature column(s), data has " +
                      std::to_string(got));
  }
};

namespace detail {

inline void write_f64_array(std::ostream& os, const double* data, Index n) {
  os << '[';
  for (Index i = 0; i < n; ++i) {
    if (i) os << ',';
    os << format_f64(data[i]);
  }
  os << ']';
}

inline void write_vector(std::ostream& os, const Vector& v) { write_f64_array(os, v.data(), v.size()); }

// Row-major layout, so a matrix serializes as its flat data block.
inline void write_matrix(std::ostream& os, const Matrix& m) { write_f64_array(os, m.data(), m.size()); }

inline std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols) {
  if (static_cast<Index>(j.size()) != rows * cols) throw DataError("model file: weight array size mismatch");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows * cols; ++i) m.data()[i] = j[static_cast<std::size_t>(i)].get<double>();
  return m;
}

}  // namespace detail

/// Serialize to JSON. Every float is written with %.17g so reloading
/// reproduces the exact f64 bit patterns.
inline std::string model_to_json(const ModelFile& model) {
  const LadderNetwork& net = model.net;
  std::ostringstream os;
  os << "{\n";
  os << "  \"format\": \"lpnn-model\",\n";
  os << "  \"version\": " << kModelFormatVersion << ",\n";
  os << "  \"input_dim\": " << net.input_dim << ",\n";
  os << "  \"head\": \"" << head_name(net.head) << "\",\n";
  os << "  \"dropout_rate\": " << format_f64(net.dropout_rate) << ",\n";
  os << "  \"layers\": [\n";
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LadderLayer& layer = net.layers[l];
    os << "    {\"out_dim\": " << layer.out_dim() << ", \"in_dim\": " << layer.in_dim() << ", \"w\": ";
    detail::write_matrix(os, layer.w);
    os << ", \"v\": ";
    detail::write_matrix(os, layer.v);
    os << ", \"b\": ";
    if (layer.b)
      detail::write_vector(os, *layer.b);
    else
      os << "null";
    os << '}' << (l + 1 < net.layers.size() ? "," : "") << '\n';
  }
  os << "  ],\n";
  os << "  \"bn\": [";
  if (net.bn.empty()) {
    os << ']';
  } else {
    os << '\n';
    for (std::size_t l = 0; l < net.bn.size(); ++l) {
      os << "    ";
      if (net.bn[l]) {
        const BatchNormParams& p = *net.bn[l];
        os << "{\"gamma\": ";
        detail::write_vector(os, p.gamma);
        os << ", \"beta\": ";
        detail::write_vector(os, p.beta);
        os << ", \"mu\": ";
        detail::write_vector(os, p.mu);
        os << ", \"sigma\": ";
        detail::write_vector(os, p.sigma);
        os << ", \"eps\": " << format_f64(p.eps) << '}';
      } else {
        os << "null";
      }
      os << (l + 1 < net.bn.size() ? "," : "") << '\n';
    }
    os << "  ]";
  }
  os << ",\n  \"standardizer\": ";
  if (model.standardizer) {
    os << "{\"mean\": ";
    detail::write_vector(os, model.standardizer->mean);
    os << ", \"std\": ";
    detail::write_vector(os, model.standardizer->std);
    os << '}';
  } else {
    os << "null";
  }
  os << ",\n  \"class_labels\": [";
  for (std::size_t i = 0; i < model.class_labels.size(); ++i) {
    if (i) os << ", ";
    os << '"' << detail::escape_json(model.class_labels[i]) << '"';
  }
  os << "]\n}\n";
  return os.str();
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "lpnn-model")
    throw DataError("model file: missing lpnn-model format tag");
  if (j.value("version", 0) != kModelFormatVersion) throw DataError("model file: unsupported version");
  ModelFile model;
  LadderNetwork& net = model.net;
  net.input_dim = j.at("input_dim").get<Index>();
  net.head = head_from_name(j.at("head").get<std::string>());
  net.dropout_rate = j.value("dropout_rate", 0.0);
  for (const auto& jl : j.at("layers")) {
    LadderLayer layer;
    const Index out = jl.at("out_dim").get<Index>();
    const Index in = jl.at("in_dim").get<Index>();
    layer.w = detail::matrix_from_json(jl.at("w"), out, in);
    layer.v = detail::matrix_from_json(jl.at("v"), out, net.input_dim);
    if (!jl.at("b").is_null()) layer.b = detail::vector_from_json(jl.at("b"));
    net.layers.push_back(std::move(layer));
  }
  if (j.contains("bn") && !j.at("bn").empty()) {
    for (const auto& jb : j.at("bn")) {
      if (jb.is_null()) {
        net.bn.emplace_back(std::nullopt);
      } else {
        BatchNormParams p;
        p.gamma = detail::vector_from_json(jb.at("gamma"));
        p.beta = detail::vector_from_json(jb.at("beta"));
        p.mu = detail::vector_from_json(jb.at("mu"));
        p.sigma = detail::vector_from_json(jb.at("sigma"));
        p.eps = jb.at("eps").get<double>();
        net.bn.emplace_back(std::move(p));
      }
    }
  }
  if (j.contains("standardizer") && !j.at("standardizer").is_null()) {
    Standardizer s;
    s.mean = detail::vector_from_json(j.at("standardizer").at("mean"));
    s.std = detail::vector_from_json(j.at("standardizer").at("std"));
    if (s.mean.size() != net.input_dim || s.std.size() != net.input_dim)
      throw DataError("model file: standardizer width mismatch");
    model.standardizer = std::move(s);
  }
  if (j.contains("class_labels"))
    for (const auto& s : j.at("class_labels")) model.class_labels.push_back(s.get<std::string>());
  net.validate();
  return model;
}

inline void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << model_to_json(model);
  if (!out) throw DataError("write failed: " + path);
}

inline void save_model(const LadderNetwork& net, const std::string& path) {
  ModelFile model;
  model.net = net;
  save_model(model, path);
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file parse error: " + std::string(e.what()));
  }
  return model_from_json(j);
}

}  // namespace lpnn
