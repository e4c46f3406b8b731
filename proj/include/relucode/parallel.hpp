#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relucode/codes.hpp"
#include "relucode/network.hpp"

namespace relucode {

/// Caps the OpenMP worker pool; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

/// Codes of many inputs stored back to back, words_per_code words each.
struct PackedCodes {
  std::size_t bits = 0;
  std::size_t words_per_code = 0;
  std::uint64_t fingerprint = 0;
  std::vector<std::size_t> layer_offsets{0};
  std::vector<std::uint64_t> words;

  std::size_t size() const noexcept {
    return words_per_code == 0 ? 0 : words.size() / words_per_code;
  }
  std::span<const std::uint64_t> row(std::size_t i) const noexcept {
    return {words.data() + i * words_per_code, words_per_code};
  }
  Code code(std::size_t i) const;
};

PackedCodes pack(const std::vector<Code>& codes);

/// Parallel over points; output order follows the rows of `points`.
PackedCodes codes_of_batch(const ReluNetwork& net, const PointMatrix& points);

/// Row-major n x n matrix of truncated Hamming distances, parallel over rows.
std::vector<std::uint32_t> pairwise_distances(const PackedCodes& codes, Threshold theta);

/// For each i, the indices j > i with Hamming distance exactly 1, ascending.
std::vector<std::vector<std::uint32_t>> unit_distance_neighbors(const PackedCodes& codes);

namespace reference {

// Single-threaded implementations on the plain per-point API, kept as
// oracles for the parallel kernels and as the benchmark baseline.

PackedCodes codes_of_batch(const ReluNetwork& net, const PointMatrix& points);
std::vector<std::uint32_t> pairwise_distances(const std::vector<Code>& codes, Threshold theta);
std::vector<std::vector<std::uint32_t>> unit_distance_neighbors(const std::vector<Code>& codes);

}  // namespace reference

}  // namespace relucode
