#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace relucode {

/// Points stored one per row, so a row is a contiguous input vector.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct AffineLayer {
  Eigen::MatrixXd weights;  // n_k x n_{k-1}
  Eigen::VectorXd bias;     // n_k

  std::size_t rows() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(weights.cols()); }

  bool operator==(const AffineLayer& other) const;
};

/// A stack of affine layers with a ReLU after each one. Immutable once built;
/// the constructor enforces the dimension chain and finiteness.
class ReluNetwork {
 public:
  ReluNetwork(std::size_t input_dim, std::vector<AffineLayer> layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<AffineLayer>& layers() const noexcept { return layers_; }
  const AffineLayer& layer(std::size_t k) const { return layers_.at(k); }
  std::size_t total_neurons() const noexcept { return total_neurons_; }
  /// Start index of each layer's neurons in the layer-major ordering.
  const std::vector<std::size_t>& layer_offsets() const noexcept { return offsets_; }
  std::size_t widest_layer() const noexcept { return widest_; }
  /// 64-bit FNV-1a hash of the canonical RCW-BIN serialization.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  bool operator==(const ReluNetwork& other) const;

 private:
  std::size_t input_dim_;
  std::vector<AffineLayer> layers_;
  std::size_t total_neurons_ = 0;
  std::size_t widest_ = 0;
  std::vector<std::size_t> offsets_;
  std::uint64_t fingerprint_ = 0;
};

struct ActivationTrace {
  std::vector<Eigen::VectorXd> pre_activations;
  std::vector<Eigen::VectorXd> activations;
};

ActivationTrace forward(const ReluNetwork& net, const Eigen::VectorXd& x);

/// Evaluates a single affine layer in a fixed summation order:
/// out[i] = bias[i] + sum_j W(i, j) * in[j], j ascending.
void affine_apply(const AffineLayer& layer, const double* in, double* out) noexcept;

/// Throws ShapeError / ValidationError if x cannot be fed to `net`.
void check_input(const ReluNetwork& net, const Eigen::VectorXd& x);

// ---- weight files -------------------------------------------------------

std::string to_rcw_json(const ReluNetwork& net);
std::string to_rcw_binary(const ReluNetwork& net);
/// Auto-detects RCW-BIN (magic "RCW1") versus RCW-JSON (leading '{').
ReluNetwork parse_network(std::string_view bytes);
ReluNetwork load_network(const std::filesystem::path& path);

enum class WeightFormat { json, binary };
void save_network(const ReluNetwork& net, const std::filesystem::path& path,
                  WeightFormat format);

// ---- diagnostics --------------------------------------------------------

struct Diagnostic {
  enum class Kind { zero_row, duplicate_hyperplane };
  Kind kind;
  std::size_t layer;
  std::size_t neuron;
  std::size_t other_neuron;  // duplicates only
  std::string message;
};

inline constexpr double kDefaultDegenerateTol = 1e-9;

/// Heuristic general-position checks. An empty result does not certify
/// general position.
std::vector<Diagnostic> validate(const ReluNetwork& net,
                                 double tol_degenerate = kDefaultDegenerateTol);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace relucode
