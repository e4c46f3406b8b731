#include "relucode/parallel.hpp"

#include <omp.h>

#include "relucode/errors.hpp"

namespace relucode {

namespace {
int default_threads = -1;
}

void set_thread_count(int n) {
  if (default_threads < 0) default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

int thread_count() { return omp_get_max_threads(); }

Code PackedCodes::code(std::size_t i) const {
  const auto r = row(i);
  return Code(std::vector<std::uint64_t>(r.begin(), r.end()), bits, layer_offsets, fingerprint);
}

PackedCodes pack(const std::vector<Code>& codes) {
  PackedCodes out;
  if (codes.empty()) return out;
  out.bits = codes.front().size();
  out.words_per_code = words_for_bits(out.bits);
  out.fingerprint = codes.front().fingerprint();
  out.layer_offsets = codes.front().layer_offsets();
  out.words.reserve(codes.size() * out.words_per_code);
  for (const auto& c : codes) {
    check_compatible(codes.front(), c);
    out.words.insert(out.words.end(), c.words().begin(), c.words().end());
  }
  return out;
}

PackedCodes codes_of_batch(const ReluNetwork& net, const PointMatrix& points) {
  if (static_cast<std::size_t>(points.cols()) != net.input_dim()) {
    throw ShapeError("points have dimension " + std::to_string(points.cols()) +
                     ", network expects " + std::to_string(net.input_dim()));
  }
  if (!points.allFinite()) {
    throw ValidationError("points contain non-finite values");
  }
  PackedCodes out;
  out.bits = net.total_neurons();
  out.words_per_code = words_for_bits(out.bits);
  out.fingerprint = net.fingerprint();
  out.layer_offsets = net.layer_offsets();
  const auto n = static_cast<std::int64_t>(points.rows());
  out.words.assign(static_cast<std::size_t>(n) * out.words_per_code, 0);
#pragma omp parallel
  {
    CodeEvaluator eval(net);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      eval.evaluate(points.row(i).data(),
                    out.words.data() + static_cast<std::size_t>(i) * out.words_per_code);
    }
  }
  return out;
}

std::vector<std::uint32_t> pairwise_distances(const PackedCodes& codes, Threshold theta) {
  const std::size_t n = codes.size();
  std::vector<std::uint32_t> out(n * n, 0);
  const std::size_t limit = theta.limit();
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto a = codes.row(ui);
    for (std::size_t j = ui + 1; j < n; ++j) {
      const auto d = static_cast<std::uint32_t>(hamming_words_truncated(a, codes.row(j), limit));
      out[ui * n + j] = d;
      out[j * n + ui] = d;
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> unit_distance_neighbors(const PackedCodes& codes) {
  const std::size_t n = codes.size();
  std::vector<std::vector<std::uint32_t>> out(n);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto a = codes.row(ui);
    for (std::size_t j = ui + 1; j < n; ++j) {
      if (hamming_words_truncated(a, codes.row(j), 2) == 1) {
        out[ui].push_back(static_cast<std::uint32_t>(j));
      }
    }
  }
  return out;
}

}  // namespace relucode
