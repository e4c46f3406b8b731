#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "relucode/network.hpp"

namespace relucode {

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t bits) noexcept {
  return (bits + kWordBits - 1) / kWordBits;
}

/// Binarized activation pattern of one input: bit layer_offsets[k] + i is set
/// iff neuron i of layer k has a strictly positive pre-activation. Bits are
/// packed layer-major into 64-bit words, bit j living at word j / 64, bit
/// j % 64 (little-endian within the word). Unused high bits of the last word
/// are always zero.
class Code {
 public:
  Code() = default;
  Code(std::size_t size, std::vector<std::size_t> layer_offsets, std::uint64_t fingerprint);
  Code(std::vector<std::uint64_t> words, std::size_t size,
       std::vector<std::size_t> layer_offsets, std::uint64_t fingerprint);

  /// Parses a 0/1 string; '|' separators mark layer boundaries.
  static Code from_string(std::string_view bits, std::uint64_t fingerprint = 0);

  std::size_t size() const noexcept { return size_; }
  bool test(std::size_t bit) const { return (words_[bit / kWordBits] >> (bit % kWordBits)) & 1U; }
  void set(std::size_t bit, bool value);
  Code with_bit(std::size_t bit, bool value) const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> mutable_words() noexcept { return words_; }
  const std::vector<std::size_t>& layer_offsets() const noexcept { return layer_offsets_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  std::size_t popcount() const noexcept;

  /// 0/1 string with '|' between layers, e.g. "11|0".
  std::string to_string() const;

  /// Identity is the bit content plus the generating network.
  bool operator==(const Code& other) const noexcept {
    return size_ == other.size_ && fingerprint_ == other.fingerprint_ && words_ == other.words_;
  }
  std::strong_ordering operator<=>(const Code& other) const noexcept;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::vector<std::size_t> layer_offsets_{0};
  std::uint64_t fingerprint_ = 0;
};

struct CodeHash {
  std::size_t operator()(const Code& code) const noexcept;
};

/// Truncation threshold theta in N u {infinity}; zero is rejected.
class Threshold {
 public:
  explicit Threshold(std::size_t value);
  static Threshold infinite() noexcept { return Threshold(); }
  /// Parses a positive integer or "inf".
  static Threshold parse(std::string_view text);

  bool is_infinite() const noexcept { return !value_.has_value(); }
  /// Largest distance this threshold lets through.
  std::size_t limit() const noexcept {
    return value_.value_or(std::numeric_limits<std::size_t>::max());
  }
  std::string to_string() const;
  bool operator==(const Threshold&) const = default;

 private:
  Threshold() = default;
  std::optional<std::size_t> value_;
};

struct CodeDistance {
  std::size_t value;
  Threshold threshold;
};

// ---- word kernels -------------------------------------------------------

/// Popcount of a XOR b over equal-length word spans.
std::size_t hamming_words(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b) noexcept;

/// min(hamming_words(a, b), limit), stopping once the limit is reached.
std::size_t hamming_words_truncated(std::span<const std::uint64_t> a,
                                    std::span<const std::uint64_t> b,
                                    std::size_t limit) noexcept;

// ---- code operations ----------------------------------------------------

Code code_of(const ReluNetwork& net, const Eigen::VectorXd& x);
Code code_of(const ReluNetwork& net, const ActivationTrace& trace);

/// Throws IncompatibleCodesError unless a and b have equal size and fingerprint.
void check_compatible(const Code& a, const Code& b);

std::size_t hamming(const Code& a, const Code& b);
CodeDistance truncated_hamming(const Code& a, const Code& b, Threshold theta);

/// d_H,2 of the two inputs' codes: 0 same cell, 1 adjacent, 2 otherwise.
int adjacency_distance(const ReluNetwork& net, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y);

struct NearBoundaryNeuron {
  std::size_t layer;
  std::size_t neuron;
  std::size_t bit;
  double pre_activation;
};

inline constexpr double kDefaultNearBoundaryEps = 1e-9;

/// Neurons whose |pre-activation| at x is below eps: their bits are fragile.
std::vector<NearBoundaryNeuron> near_boundary(const ReluNetwork& net, const Eigen::VectorXd& x,
                                              double eps = kDefaultNearBoundaryEps);

/// Allocation-free code extraction for batch loops. One instance per thread.
class CodeEvaluator {
 public:
  explicit CodeEvaluator(const ReluNetwork& net);
  std::size_t words_per_code() const noexcept { return words_; }
  /// Writes words_per_code() words for input `x` (input_dim entries).
  void evaluate(const double* x, std::uint64_t* out) noexcept;

 private:
  const ReluNetwork* net_;
  std::size_t words_;
  std::vector<double> buf_a_;
  std::vector<double> buf_b_;
};

// ---- code sets (RCC/1 and text) -----------------------------------------

struct CodeSet {
  std::size_t bits = 0;
  std::uint64_t fingerprint = 0;
  std::vector<Code> codes;
};

std::string to_rcc_binary(const CodeSet& set);
/// One code per line, layer boundaries marked with '|'.
std::string to_rcc_text(const CodeSet& set);
/// Auto-detects binary (magic "RCC1") versus text. RCC/1 carries no layer
/// boundaries, so binary-loaded codes report a single layer unless
/// `layer_offsets` is supplied. Text-loaded codes carry fingerprint 0.
CodeSet parse_code_set(std::string_view bytes,
                       std::optional<std::vector<std::size_t>> layer_offsets = std::nullopt);
CodeSet load_code_set(const std::filesystem::path& path,
                      std::optional<std::vector<std::size_t>> layer_offsets = std::nullopt);

}  // namespace relucode
