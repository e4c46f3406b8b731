#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relucode/codes.hpp"
#include "relucode/network.hpp"
#include "relucode/random.hpp"

namespace relucode::testing {

/// One layer, identity 2x2 weights, zero bias.
inline ReluNetwork net_e1() {
  return ReluNetwork(2, {AffineLayer{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)}});
}

/// E1 followed by a single neuron computing a1 - a2.
inline ReluNetwork net_e2() {
  Eigen::MatrixXd w2(1, 2);
  w2 << 1.0, -1.0;
  return ReluNetwork(2, {AffineLayer{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)},
                         AffineLayer{w2, Eigen::VectorXd::Zero(1)}});
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

/// Gaussian weights and biases; continuous draws are in general position
/// with probability one.
inline ReluNetwork random_network(Rng& rng, std::size_t input_dim,
                                  const std::vector<std::size_t>& widths, double bias_scale = 1.0) {
  std::vector<AffineLayer> layers;
  std::size_t fan_in = input_dim;
  for (const auto w : widths) {
    AffineLayer l{Eigen::MatrixXd(w, fan_in), Eigen::VectorXd(w)};
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = bias_scale * rng.normal();
    layers.push_back(std::move(l));
    fan_in = w;
  }
  return ReluNetwork(input_dim, std::move(layers));
}

inline Code random_code(Rng& rng, std::size_t bits, std::uint64_t fingerprint = 7) {
  Code c(bits, {0}, fingerprint);
  for (std::size_t i = 0; i < bits; ++i) c.set(i, (rng.next() & 1U) != 0);
  return c;
}

/// Naive per-bit Hamming distance, the oracle for the packed kernels.
inline std::size_t naive_hamming(const Code& a, const Code& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.test(i) != b.test(i) ? 1 : 0;
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("relucode_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace relucode::testing
