#include "relucode/parallel.hpp"

namespace relucode::reference {

PackedCodes codes_of_batch(const ReluNetwork& net, const PointMatrix& points) {
  std::vector<Code> codes;
  codes.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    codes.push_back(code_of(net, Eigen::VectorXd(points.row(i).transpose())));
  }
  PackedCodes out = pack(codes);
  if (codes.empty()) {
    out.bits = net.total_neurons();
    out.words_per_code = words_for_bits(out.bits);
    out.fingerprint = net.fingerprint();
    out.layer_offsets = net.layer_offsets();
  }
  return out;
}

std::vector<std::uint32_t> pairwise_distances(const std::vector<Code>& codes, Threshold theta) {
  const std::size_t n = codes.size();
  std::vector<std::uint32_t> out(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = static_cast<std::uint32_t>(truncated_hamming(codes[i], codes[j], theta).value);
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> unit_distance_neighbors(const std::vector<Code>& codes) {
  std::vector<std::vector<std::uint32_t>> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      if (hamming(codes[i], codes[j]) == 1) out[i].push_back(static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

}  // namespace relucode::reference
