#include "relucode/codes.hpp"

#include <algorithm>
#include <bit>
#include <charconv>

#include "relucode/binary_io.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"

namespace relucode {

namespace {

constexpr std::string_view kCodeSetMagic = "RCC1";

void check_offsets(const std::vector<std::size_t>& offsets, std::size_t size) {
  if (offsets.empty() || offsets.front() != 0) {
    throw ValidationError("code layer_offsets must start at 0");
  }
  for (std::size_t k = 1; k < offsets.size(); ++k) {
    if (offsets[k] <= offsets[k - 1]) {
      throw ValidationError("code layer_offsets must be strictly increasing");
    }
  }
  if (size > 0 && offsets.back() >= size) {
    throw ValidationError("code layer offset beyond code length");
  }
}

}  // namespace

Code::Code(std::size_t size, std::vector<std::size_t> layer_offsets, std::uint64_t fingerprint)
    : words_(words_for_bits(size), 0),
      size_(size),
      layer_offsets_(std::move(layer_offsets)),
      fingerprint_(fingerprint) {
  check_offsets(layer_offsets_, size_);
}

Code::Code(std::vector<std::uint64_t> words, std::size_t size,
           std::vector<std::size_t> layer_offsets, std::uint64_t fingerprint)
    : words_(std::move(words)),
      size_(size),
      layer_offsets_(std::move(layer_offsets)),
      fingerprint_(fingerprint) {
  if (words_.size() != words_for_bits(size_)) {
    throw ValidationError("code has " + std::to_string(words_.size()) + " words for " +
                          std::to_string(size_) + " bits");
  }
  check_offsets(layer_offsets_, size_);
  if (size_ % kWordBits != 0 && !words_.empty() &&
      (words_.back() >> (size_ % kWordBits)) != 0) {
    throw ValidationError("code has bits set beyond its length");
  }
}

Code Code::from_string(std::string_view bits, std::uint64_t fingerprint) {
  std::vector<std::size_t> offsets{0};
  std::size_t n = 0;
  for (const char c : bits) {
    if (c == '0' || c == '1') {
      ++n;
    } else if (c == '|') {
      offsets.push_back(n);
    } else {
      throw ParseError(std::string("invalid character '") + c + "' in code string", n);
    }
  }
  Code code(n, std::move(offsets), fingerprint);
  std::size_t i = 0;
  for (const char c : bits) {
    if (c == '|') continue;
    code.set(i++, c == '1');
  }
  return code;
}

void Code::set(std::size_t bit, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (bit % kWordBits);
  if (value) {
    words_[bit / kWordBits] |= mask;
  } else {
    words_[bit / kWordBits] &= ~mask;
  }
}

Code Code::with_bit(std::size_t bit, bool value) const {
  Code copy = *this;
  copy.set(bit, value);
  return copy;
}

std::size_t Code::popcount() const noexcept {
  std::size_t total = 0;
  for (const auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::string Code::to_string() const {
  std::string out;
  out.reserve(size_ + layer_offsets_.size());
  std::size_t next_layer = 1;
  for (std::size_t i = 0; i < size_; ++i) {
    if (next_layer < layer_offsets_.size() && layer_offsets_[next_layer] == i) {
      out.push_back('|');
      ++next_layer;
    }
    out.push_back(test(i) ? '1' : '0');
  }
  return out;
}

std::strong_ordering Code::operator<=>(const Code& other) const noexcept {
  if (auto c = fingerprint_ <=> other.fingerprint_; c != 0) return c;
  if (auto c = size_ <=> other.size_; c != 0) return c;
  return std::lexicographical_compare_three_way(words_.begin(), words_.end(),
                                                other.words_.begin(), other.words_.end());
}

std::size_t CodeHash::operator()(const Code& code) const noexcept {
  std::uint64_t h = code.fingerprint() ^ 0x9e3779b97f4a7c15ULL;
  for (const auto w : code.words()) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

Threshold::Threshold(std::size_t value) : value_(value) {
  if (value == 0) {
    throw InvalidThresholdError("threshold must be positive (got 0)");
  }
}

Threshold Threshold::parse(std::string_view text) {
  if (text == "inf" || text == "infinity" || text == "INF") {
    return infinite();
  }
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidThresholdError("threshold must be a positive integer or 'inf', got '" +
                                std::string(text) + "'");
  }
  return Threshold(value);
}

std::string Threshold::to_string() const {
  return value_ ? std::to_string(*value_) : std::string("inf");
}

// ---- kernels --------------------------------------------------------------

std::size_t hamming_words(std::span<const std::uint64_t> a,
                          std::span<const std::uint64_t> b) noexcept {
  std::size_t total = 0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    total += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]) +
                                      std::popcount(a[i + 1] ^ b[i + 1]) +
                                      std::popcount(a[i + 2] ^ b[i + 2]) +
                                      std::popcount(a[i + 3] ^ b[i + 3]));
  }
  for (; i < n; ++i) {
    total += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  }
  return total;
}

std::size_t hamming_words_truncated(std::span<const std::uint64_t> a,
                                    std::span<const std::uint64_t> b,
                                    std::size_t limit) noexcept {
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
    if (total >= limit) return limit;
  }
  return total;
}

// ---- codes -------------------------------------------------------------------

CodeEvaluator::CodeEvaluator(const ReluNetwork& net)
    : net_(&net),
      words_(words_for_bits(net.total_neurons())),
      buf_a_(net.widest_layer()),
      buf_b_(net.widest_layer()) {}

void CodeEvaluator::evaluate(const double* x, std::uint64_t* out) noexcept {
  std::fill(out, out + words_, std::uint64_t{0});
  const double* in = x;
  double* pre = buf_a_.data();
  double* spare = buf_b_.data();
  std::size_t bit = 0;
  for (const auto& layer : net_->layers()) {
    affine_apply(layer, in, pre);
    const std::size_t rows = layer.rows();
    for (std::size_t i = 0; i < rows; ++i, ++bit) {
      if (pre[i] > 0.0) {
        out[bit / kWordBits] |= std::uint64_t{1} << (bit % kWordBits);
      } else {
        pre[i] = 0.0;
      }
    }
    in = pre;
    std::swap(pre, spare);
  }
}

Code code_of(const ReluNetwork& net, const ActivationTrace& trace) {
  if (trace.pre_activations.size() != net.depth()) {
    throw ShapeError("trace has " + std::to_string(trace.pre_activations.size()) +
                     " layers, network has " + std::to_string(net.depth()));
  }
  Code code(net.total_neurons(), net.layer_offsets(), net.fingerprint());
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& pre = trace.pre_activations[k];
    if (static_cast<std::size_t>(pre.size()) != net.layer(k).rows()) {
      throw ShapeError("trace layer " + std::to_string(k) + " has wrong width");
    }
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      if (pre[i] > 0.0) code.set(net.layer_offsets()[k] + static_cast<std::size_t>(i), true);
    }
  }
  return code;
}

Code code_of(const ReluNetwork& net, const Eigen::VectorXd& x) {
  return code_of(net, forward(net, x));
}

void check_compatible(const Code& a, const Code& b) {
  if (a.fingerprint() != b.fingerprint()) {
    throw IncompatibleCodesError("codes come from different networks");
  }
  if (a.size() != b.size()) {
    throw IncompatibleCodesError("codes have different lengths (" + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()) + ")");
  }
}

std::size_t hamming(const Code& a, const Code& b) {
  check_compatible(a, b);
  return hamming_words(a.words(), b.words());
}

CodeDistance truncated_hamming(const Code& a, const Code& b, Threshold theta) {
  check_compatible(a, b);
  return {hamming_words_truncated(a.words(), b.words(), theta.limit()), theta};
}

int adjacency_distance(const ReluNetwork& net, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  const auto d = truncated_hamming(code_of(net, x), code_of(net, y), Threshold(2));
  return static_cast<int>(d.value);
}

std::vector<NearBoundaryNeuron> near_boundary(const ReluNetwork& net, const Eigen::VectorXd& x,
                                              double eps) {
  const auto trace = forward(net, x);
  std::vector<NearBoundaryNeuron> out;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& pre = trace.pre_activations[k];
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      if (std::abs(pre[i]) < eps) {
        out.push_back({k, static_cast<std::size_t>(i),
                       net.layer_offsets()[k] + static_cast<std::size_t>(i), pre[i]});
      }
    }
  }
  return out;
}

// ---- code sets ---------------------------------------------------------------

std::string to_rcc_binary(const CodeSet& set) {
  std::string out(kCodeSetMagic);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(set.bits));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(set.codes.size()));
  detail::put<std::uint64_t>(out, set.fingerprint);
  for (const auto& code : set.codes) {
    if (code.size() != set.bits) {
      throw ValidationError("code of length " + std::to_string(code.size()) +
                            " in a set of " + std::to_string(set.bits) + "-bit codes");
    }
    for (const auto w : code.words()) detail::put<std::uint64_t>(out, w);
  }
  return out;
}

std::string to_rcc_text(const CodeSet& set) {
  std::string out;
  for (const auto& code : set.codes) {
    out += code.to_string();
    out.push_back('\n');
  }
  return out;
}

namespace {

CodeSet parse_binary_codes(std::string_view bytes,
                           const std::optional<std::vector<std::size_t>>& offsets) {
  detail::ByteReader in(bytes, "RCC/1");
  in.expect_magic(kCodeSetMagic);
  CodeSet set;
  set.bits = in.get<std::uint32_t>();
  const auto count = in.get<std::uint32_t>();
  set.fingerprint = in.get<std::uint64_t>();
  const std::size_t words = words_for_bits(set.bits);
  if (static_cast<std::size_t>(count) * words * sizeof(std::uint64_t) != in.remaining()) {
    throw ParseError("RCC/1: header declares " + std::to_string(count) + " codes of " +
                         std::to_string(set.bits) + " bits but payload has " +
                         std::to_string(in.remaining()) + " bytes",
                     in.position());
  }
  const std::vector<std::size_t> layer_offsets = offsets.value_or(std::vector<std::size_t>{0});
  set.codes.reserve(count);
  for (std::uint32_t c = 0; c < count; ++c) {
    std::vector<std::uint64_t> w(words);
    for (auto& word : w) word = in.get<std::uint64_t>();
    try {
      set.codes.emplace_back(std::move(w), set.bits, layer_offsets, set.fingerprint);
    } catch (const ValidationError& e) {
      throw ParseError("RCC/1: code " + std::to_string(c) + ": " + e.what(),
                       in.position() - words * sizeof(std::uint64_t));
    }
  }
  return set;
}

CodeSet parse_text_codes(std::string_view bytes) {
  CodeSet set;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    Code code;
    try {
      code = Code::from_string(line);
    } catch (const Error& e) {
      throw ParseError("code text line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!set.codes.empty() && (code.size() != set.bits ||
                               code.layer_offsets() != set.codes.front().layer_offsets())) {
      throw ParseError("code text line " + std::to_string(line_no) +
                           ": layout differs from the first code",
                       line_no);
    }
    set.bits = code.size();
    set.codes.push_back(std::move(code));
  }
  return set;
}

}  // namespace

CodeSet parse_code_set(std::string_view bytes,
                       std::optional<std::vector<std::size_t>> layer_offsets) {
  if (bytes.substr(0, kCodeSetMagic.size()) == kCodeSetMagic) {
    return parse_binary_codes(bytes, layer_offsets);
  }
  return parse_text_codes(bytes);
}

CodeSet load_code_set(const std::filesystem::path& path,
                      std::optional<std::vector<std::size_t>> layer_offsets) {
  const std::string bytes = read_file(path);
  try {
    return parse_code_set(bytes, std::move(layer_offsets));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.location());
  }
}

}  // namespace relucode
