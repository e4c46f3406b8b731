#include "relucode/network.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "relucode/binary_io.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"

namespace relucode {

using nlohmann::json;

namespace {

constexpr std::string_view kBinaryMagic = "RCW1";
constexpr std::string_view kJsonFormatTag = "rcw-json/1";

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string layer_shape(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

}  // namespace

bool AffineLayer::operator==(const AffineLayer& other) const {
  return weights.rows() == other.weights.rows() &&
         weights.cols() == other.weights.cols() && bias.size() == other.bias.size() &&
         weights == other.weights && bias == other.bias;
}

ReluNetwork::ReluNetwork(std::size_t input_dim, std::vector<AffineLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) {
    throw ValidationError("input_dim must be positive");
  }
  if (layers_.empty()) {
    throw ValidationError("network has no layers");
  }
  std::size_t expected = input_dim_;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.rows() == 0) {
      throw ValidationError("layer " + std::to_string(k) + " has no neurons");
    }
    if (layer.cols() != expected) {
      throw ValidationError("layer " + std::to_string(k) + " expects " +
                            std::to_string(expected) + " inputs, got " +
                            std::to_string(layer.cols()) + " (weights " +
                            layer_shape(layer.rows(), layer.cols()) + ")");
    }
    if (static_cast<std::size_t>(layer.bias.size()) != layer.rows()) {
      throw ValidationError("layer " + std::to_string(k) + " has " +
                            std::to_string(layer.rows()) + " weight rows but bias of length " +
                            std::to_string(layer.bias.size()));
    }
    if (!all_finite(layer.weights) || !layer.bias.allFinite()) {
      throw ValidationError("layer " + std::to_string(k) + " contains non-finite values");
    }
    offsets_.push_back(total_neurons_);
    total_neurons_ += layer.rows();
    widest_ = std::max(widest_, layer.rows());
    expected = layer.rows();
  }
  fingerprint_ = fnv1a64(to_rcw_binary(*this));
}

bool ReluNetwork::operator==(const ReluNetwork& other) const {
  return input_dim_ == other.input_dim_ && layers_ == other.layers_;
}

void affine_apply(const AffineLayer& layer, const double* in, double* out) noexcept {
  const Eigen::Index rows = layer.weights.rows();
  const Eigen::Index cols = layer.weights.cols();
  for (Eigen::Index i = 0; i < rows; ++i) {
    double acc = layer.bias[i];
    for (Eigen::Index j = 0; j < cols; ++j) {
      acc += layer.weights(i, j) * in[j];
    }
    out[i] = acc;
  }
}

void check_input(const ReluNetwork& net, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw ShapeError("input has dimension " + std::to_string(x.size()) +
                     ", network expects " + std::to_string(net.input_dim()));
  }
  if (!x.allFinite()) {
    throw ValidationError("input contains non-finite values");
  }
}

ActivationTrace forward(const ReluNetwork& net, const Eigen::VectorXd& x) {
  check_input(net, x);
  ActivationTrace trace;
  trace.pre_activations.reserve(net.depth());
  trace.activations.reserve(net.depth());
  const double* in = x.data();
  for (const auto& layer : net.layers()) {
    Eigen::VectorXd pre(layer.weights.rows());
    affine_apply(layer, in, pre.data());
    trace.activations.push_back(pre.cwiseMax(0.0));
    trace.pre_activations.push_back(std::move(pre));
    in = trace.activations.back().data();
  }
  return trace;
}

// ---- serialization ----------------------------------------------------------

std::string to_rcw_json(const ReluNetwork& net) {
  json doc;
  doc["format"] = kJsonFormatTag;
  doc["input_dim"] = net.input_dim();
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        row.push_back(layer.weights(i, j));
      }
      rows.push_back(std::move(row));
    }
    json bias = json::array();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      bias.push_back(layer.bias[i]);
    }
    layers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

std::string to_rcw_binary(const ReluNetwork& net) {
  std::string out(kBinaryMagic);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.input_dim()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.depth()));
  for (const auto& layer : net.layers()) {
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.rows()));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(layer.cols()));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        detail::put<double>(out, layer.weights(i, j));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      detail::put<double>(out, layer.bias[i]);
    }
  }
  return out;
}

namespace {

ReluNetwork parse_binary(std::string_view bytes) {
  detail::ByteReader in(bytes, "RCW-BIN");
  in.expect_magic(kBinaryMagic);
  const auto input_dim = in.get<std::uint32_t>();
  const auto count = in.get<std::uint32_t>();
  std::vector<AffineLayer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto rows = in.get<std::uint32_t>();
    const auto cols = in.get<std::uint32_t>();
    const std::size_t need = (static_cast<std::size_t>(rows) * cols + rows) * sizeof(double);
    if (need > in.remaining()) {
      throw ParseError("RCW-BIN: layer " + std::to_string(k) + " declares " +
                           layer_shape(rows, cols) + " but only " +
                           std::to_string(in.remaining()) + " bytes remain at byte " +
                           std::to_string(in.position()),
                       in.position());
    }
    AffineLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        layer.weights(i, j) = in.get<double>();
      }
    }
    for (std::uint32_t i = 0; i < rows; ++i) {
      layer.bias[i] = in.get<double>();
    }
    layers.push_back(std::move(layer));
  }
  in.expect_end();
  return ReluNetwork(input_dim, std::move(layers));
}

double json_real(const json& value, const std::string& where) {
  if (!value.is_number()) {
    throw ValidationError("RCW-JSON: " + where + " is not a number");
  }
  return value.get<double>();
}

ReluNetwork parse_json(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("RCW-JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) {
    throw ValidationError("RCW-JSON: top level must be an object");
  }
  if (!doc.contains("format") || !doc["format"].is_string() ||
      doc["format"].get<std::string>() != kJsonFormatTag) {
    throw ValidationError("RCW-JSON: missing or unsupported \"format\" (expected \"rcw-json/1\")");
  }
  if (!doc.contains("input_dim") || !doc["input_dim"].is_number_unsigned()) {
    throw ValidationError("RCW-JSON: \"input_dim\" must be a non-negative integer");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw ValidationError("RCW-JSON: \"layers\" must be an array");
  }
  std::vector<AffineLayer> layers;
  std::size_t k = 0;
  for (const auto& entry : doc["layers"]) {
    const std::string where = "layer " + std::to_string(k);
    if (!entry.is_object() || !entry.contains("weights") || !entry.contains("bias") ||
        !entry["weights"].is_array() || !entry["bias"].is_array()) {
      throw ValidationError("RCW-JSON: " + where + " needs array fields \"weights\" and \"bias\"");
    }
    const auto& rows = entry["weights"];
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows == 0 || !rows[0].is_array() ? 0 : rows[0].size();
    AffineLayer layer{Eigen::MatrixXd(n_rows, n_cols), Eigen::VectorXd(entry["bias"].size())};
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (!rows[i].is_array() || rows[i].size() != n_cols) {
        throw ValidationError("RCW-JSON: " + where + " weight row " + std::to_string(i) +
                              " is ragged (expected " + std::to_string(n_cols) + " entries)");
      }
      for (std::size_t j = 0; j < n_cols; ++j) {
        layer.weights(i, j) = json_real(rows[i][j], where + " weights[" + std::to_string(i) +
                                                        "][" + std::to_string(j) + "]");
      }
    }
    for (std::size_t i = 0; i < entry["bias"].size(); ++i) {
      layer.bias[i] = json_real(entry["bias"][i], where + " bias[" + std::to_string(i) + "]");
    }
    layers.push_back(std::move(layer));
    ++k;
  }
  return ReluNetwork(doc["input_dim"].get<std::size_t>(), std::move(layers));
}

}  // namespace

ReluNetwork parse_network(std::string_view bytes) {
  if (bytes.substr(0, kBinaryMagic.size()) == kBinaryMagic) {
    return parse_binary(bytes);
  }
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && bytes[first] == '{') {
    return parse_json(bytes);
  }
  throw ParseError("weight file is neither RCW-BIN (magic RCW1) nor RCW-JSON (leading '{')",
                   first == std::string_view::npos ? 0 : first);
}

ReluNetwork load_network(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_network(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.location());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_network(const ReluNetwork& net, const std::filesystem::path& path,
                  WeightFormat format) {
  write_file(path, format == WeightFormat::json ? to_rcw_json(net) : to_rcw_binary(net));
}

// ---- diagnostics --------------------------------------------------------

std::vector<Diagnostic> validate(const ReluNetwork& net, double tol_degenerate) {
  std::vector<Diagnostic> out;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& layer = net.layer(k);
    const Eigen::Index rows = layer.weights.rows();
    // Each hyperplane as (w, b) / |w|, sign fixed so the first nonzero weight is positive.
    std::vector<Eigen::VectorXd> normalized(rows);
    std::vector<bool> zero(rows, false);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double norm = layer.weights.row(i).norm();
      if (norm <= tol_degenerate) {
        zero[i] = true;
        out.push_back({Diagnostic::Kind::zero_row, k, static_cast<std::size_t>(i), 0,
                       "zero row: layer " + std::to_string(k) + " neuron " +
                           std::to_string(i) + " has an all-zero weight row"});
        continue;
      }
      Eigen::VectorXd v(layer.weights.cols() + 1);
      v.head(layer.weights.cols()) = layer.weights.row(i).transpose() / norm;
      v[layer.weights.cols()] = layer.bias[i] / norm;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) > tol_degenerate) {
          if (v[j] < 0) v = -v;
          break;
        }
      }
      normalized[i] = std::move(v);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (zero[i]) continue;
      for (Eigen::Index j = i + 1; j < rows; ++j) {
        if (zero[j]) continue;
        if ((normalized[i] - normalized[j]).cwiseAbs().maxCoeff() <= tol_degenerate) {
          out.push_back({Diagnostic::Kind::duplicate_hyperplane, k,
                         static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                         "duplicate hyperplane: layer " + std::to_string(k) + " neurons " +
                             std::to_string(i) + " and " + std::to_string(j)});
        }
      }
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  return fnv1a64(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

}  // namespace relucode
