#include "relucode/tessellation.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "relucode/binary_io.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"

namespace relucode {

// ---- census ----------------------------------------------------------------------

std::size_t CellCensus::distinct_codes_correct() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const auto& e) { return e.second.correct_count > 0; }));
}

CellCensus census(const ReluNetwork& net, const Dataset& data,
                  const std::optional<std::vector<int>>& predictions) {
  if (data.size() == 0) {
    throw ValidationError("empty dataset");
  }
  if (data.labeled() && data.labels.size() != data.size()) {
    throw ValidationError("dataset has " + std::to_string(data.labels.size()) + " labels for " +
                          std::to_string(data.size()) + " points");
  }
  if (predictions && predictions->size() != data.size()) {
    throw ValidationError("got " + std::to_string(predictions->size()) + " predictions for " +
                          std::to_string(data.size()) + " points");
  }
  const PackedCodes packed = codes_of_batch(net, data.points);
  CellCensus out;
  out.dataset_size = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& stats = out.entries[packed.code(i)];
    ++stats.count;
    if (data.labeled()) {
      ++stats.per_class_counts[data.labels[i]];
      if (predictions && (*predictions)[i] == data.labels[i]) ++stats.correct_count;
    }
  }
  return out;
}

std::optional<int> epoch_from_filename(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  std::size_t end = stem.size();
  std::size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end || end - begin > 9) return std::nullopt;
  return std::stoi(stem.substr(begin, end - begin));
}

std::vector<CellCensus> census_series(
    const std::vector<std::filesystem::path>& checkpoints, const Dataset& data,
    const std::optional<std::vector<std::vector<int>>>& predictions_per_checkpoint) {
  if (checkpoints.empty()) {
    throw SeriesError("no checkpoints given");
  }
  if (predictions_per_checkpoint && predictions_per_checkpoint->size() != checkpoints.size()) {
    throw SeriesError("predictions given for " + std::to_string(predictions_per_checkpoint->size()) +
                      " of " + std::to_string(checkpoints.size()) + " checkpoints");
  }
  std::vector<CellCensus> series;
  std::vector<std::size_t> widths;
  std::size_t input_dim = 0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const ReluNetwork net = load_network(checkpoints[c]);
    std::vector<std::size_t> w;
    for (const auto& layer : net.layers()) w.push_back(layer.rows());
    if (c == 0) {
      widths = w;
      input_dim = net.input_dim();
    } else if (w != widths || net.input_dim() != input_dim) {
      throw SeriesError("checkpoint '" + checkpoints[c].string() +
                        "' has a different architecture than '" + checkpoints[0].string() + "'");
    }
    std::optional<std::vector<int>> predictions;
    if (predictions_per_checkpoint) predictions = (*predictions_per_checkpoint)[c];
    CellCensus result = census(net, data, predictions);
    result.epoch_tag = epoch_from_filename(checkpoints[c]).value_or(static_cast<int>(c + 1));
    series.push_back(std::move(result));
  }
  return series;
}

std::string census_summary_csv(const std::vector<CellCensus>& series) {
  std::string out = "epoch,distinct_codes,distinct_codes_correct,dataset_size\n";
  for (const auto& c : series) {
    out += std::to_string(c.epoch_tag.value_or(0)) + "," + std::to_string(c.distinct_codes()) +
           "," + std::to_string(c.distinct_codes_correct()) + "," +
           std::to_string(c.dataset_size) + "\n";
  }
  return out;
}

std::string census_cells_csv(const CellCensus& census) {
  std::string out = "code,count,correct_count,per_class\n";
  for (const auto& [code, stats] : census.entries) {
    out += code.to_string() + "," + std::to_string(stats.count) + "," +
           std::to_string(stats.correct_count) + ",";
    bool first = true;
    for (const auto& [label, count] : stats.per_class_counts) {
      if (!first) out.push_back(';');
      out += std::to_string(label) + ":" + std::to_string(count);
      first = false;
    }
    out.push_back('\n');
  }
  return out;
}

// ---- adjacency ------------------------------------------------------------------

AdjacencyGraph adjacency_graph(const std::vector<Code>& codes, std::size_t theta) {
  if (theta < 2) {
    throw InvalidThresholdError("adjacency screening threshold must be at least 2, got " +
                                std::to_string(theta));
  }
  AdjacencyGraph graph;
  std::unordered_set<Code, CodeHash> seen;
  for (const auto& c : codes) {
    if (!graph.nodes.empty()) check_compatible(graph.nodes.front(), c);
    if (seen.insert(c).second) graph.nodes.push_back(c);
  }
  const auto neighbors = unit_distance_neighbors(pack(graph.nodes));
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    for (const auto j : neighbors[i]) graph.edges.emplace_back(i, j);
  }
  return graph;
}

std::string to_json(const AdjacencyGraph& graph) {
  nlohmann::json doc;
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& c : graph.nodes) nodes.push_back(c.to_string());
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : graph.edges) edges.push_back({i, j});
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

// ---- distance matrices -------------------------------------------------------------

std::size_t DistanceMatrix::max_value() const { return std::min(theta.limit(), bits); }

DistanceMatrix distance_matrix(const std::vector<Code>& codes, Threshold theta,
                               std::size_t max_codes) {
  if (codes.size() > max_codes) {
    throw ValidationError("distance matrix limited to " + std::to_string(max_codes) +
                          " codes, got " + std::to_string(codes.size()));
  }
  DistanceMatrix m;
  m.n = codes.size();
  m.bits = codes.empty() ? 0 : codes.front().size();
  m.theta = theta;
  m.values = pairwise_distances(pack(codes), theta);
  return m;
}

std::string to_distance_csv(const DistanceMatrix& matrix) {
  std::string out;
  for (std::size_t i = 0; i < matrix.n; ++i) {
    for (std::size_t j = 0; j < matrix.n; ++j) {
      if (j) out.push_back(',');
      out += std::to_string(matrix.at(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

std::string to_distance_binary(const DistanceMatrix& matrix) {
  if (matrix.max_value() > 0xFFFF) {
    throw ValidationError("distances up to " + std::to_string(matrix.max_value()) +
                          " do not fit RCD1's 16-bit entries");
  }
  std::string out = "RCD1";
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.n));
  for (const auto v : matrix.values) detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(v));
  return out;
}

DistanceMatrix parse_distance_binary(std::string_view bytes) {
  detail::ByteReader in(bytes, "RCD1");
  in.expect_magic("RCD1");
  DistanceMatrix m;
  m.n = in.get<std::uint32_t>();
  if (m.n * m.n * sizeof(std::uint16_t) != in.remaining()) {
    throw ParseError("RCD1: payload size does not match n = " + std::to_string(m.n),
                     in.position());
  }
  m.values.resize(m.n * m.n);
  for (auto& v : m.values) v = in.get<std::uint16_t>();
  return m;
}

MatrixFormat write_distance_matrix(const DistanceMatrix& matrix, const std::filesystem::path& path,
                                   MatrixFormat requested) {
  if (requested == MatrixFormat::binary && matrix.max_value() <= 0xFFFF) {
    write_file(path, to_distance_binary(matrix));
    return MatrixFormat::binary;
  }
  write_file(path, to_distance_csv(matrix));
  return MatrixFormat::csv;
}

// ---- grid ---------------------------------------------------------------------------

namespace {

void check_grid_args(const ReluNetwork& net,
                     const std::array<std::pair<double, double>, 2>& bounds,
                     std::size_t resolution) {
  if (net.input_dim() != 2) {
    throw UnsupportedDimensionError("grid requires 2-D input, network has input_dim " +
                                    std::to_string(net.input_dim()));
  }
  if (resolution < 2) {
    throw ValidationError("grid resolution must be at least 2");
  }
  for (const auto& [low, high] : bounds) {
    if (!(low < high) || !std::isfinite(low) || !std::isfinite(high)) {
      throw ValidationError("grid bounds must be finite with low < high");
    }
  }
}

struct WordsKey {
  const std::uint64_t* data;
  std::size_t n;
  bool operator==(const WordsKey& o) const { return std::equal(data, data + n, o.data); }
};

struct WordsKeyHash {
  std::size_t operator()(const WordsKey& k) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::size_t i = 0; i < k.n; ++i) {
      h ^= k.data[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// Collects distinct id pairs among right and up neighbors, sorted by ids.
template <typename HammingFn>
std::vector<GridNeighborPair> neighbor_pairs(const std::vector<std::uint32_t>& ids,
                                             std::size_t res, HammingFn&& distance) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, GridNeighborPair> pairs;
  auto visit = [&](std::size_t p, std::size_t q) {
    auto a = ids[p];
    auto b = ids[q];
    if (a == b) return;
    if (a > b) {
      std::swap(a, b);
      std::swap(p, q);
    }
    auto [it, inserted] = pairs.try_emplace({a, b});
    if (inserted) {
      it->second = GridNeighborPair{a, b, distance(a, b), 0, {p, q}};
    }
    ++it->second.pixel_pairs;
  };
  for (std::size_t y = 0; y < res; ++y) {
    for (std::size_t x = 0; x < res; ++x) {
      const std::size_t p = y * res + x;
      if (x + 1 < res) visit(p, p + 1);
      if (y + 1 < res) visit(p, p + res);
    }
  }
  std::vector<GridNeighborPair> out;
  out.reserve(pairs.size());
  for (auto& [key, pair] : pairs) out.push_back(pair);
  return out;
}

PointMatrix grid_points(const std::array<std::pair<double, double>, 2>& bounds,
                        std::size_t res) {
  PointMatrix pts(static_cast<Eigen::Index>(res * res), 2);
  const double dx = (bounds[0].second - bounds[0].first) / static_cast<double>(res);
  const double dy = (bounds[1].second - bounds[1].first) / static_cast<double>(res);
  for (std::size_t y = 0; y < res; ++y) {
    for (std::size_t x = 0; x < res; ++x) {
      const auto i = static_cast<Eigen::Index>(y * res + x);
      pts(i, 0) = bounds[0].first + (static_cast<double>(x) + 0.5) * dx;
      pts(i, 1) = bounds[1].first + (static_cast<double>(y) + 0.5) * dy;
    }
  }
  return pts;
}

}  // namespace

Eigen::VectorXd GridTessellation::center(std::size_t index) const {
  const std::size_t x = index % resolution;
  const std::size_t y = index / resolution;
  const double dx = (bounds[0].second - bounds[0].first) / static_cast<double>(resolution);
  const double dy = (bounds[1].second - bounds[1].first) / static_cast<double>(resolution);
  Eigen::VectorXd c(2);
  c[0] = bounds[0].first + (static_cast<double>(x) + 0.5) * dx;
  c[1] = bounds[1].first + (static_cast<double>(y) + 0.5) * dy;
  return c;
}

GridTessellation grid_tessellation(const ReluNetwork& net,
                                   const std::array<std::pair<double, double>, 2>& bounds,
                                   std::size_t resolution) {
  check_grid_args(net, bounds, resolution);
  GridTessellation grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  const PackedCodes packed = codes_of_batch(net, grid_points(bounds, resolution));

  std::unordered_map<WordsKey, std::uint32_t, WordsKeyHash> ids;
  grid.cell_ids.resize(packed.size());
  for (std::size_t i = 0; i < packed.size(); ++i) {
    const WordsKey key{packed.row(i).data(), packed.words_per_code};
    auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(grid.id_to_code.size()));
    if (inserted) grid.id_to_code.push_back(packed.code(i));
    grid.cell_ids[i] = it->second;
  }
  grid.neighbor_pairs = neighbor_pairs(grid.cell_ids, resolution, [&](std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(
        hamming_words(grid.id_to_code[a].words(), grid.id_to_code[b].words()));
  });
  return grid;
}

namespace reference {

GridTessellation grid_tessellation(const ReluNetwork& net,
                                   const std::array<std::pair<double, double>, 2>& bounds,
                                   std::size_t resolution) {
  check_grid_args(net, bounds, resolution);
  GridTessellation grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  std::map<Code, std::uint32_t> ids;
  grid.cell_ids.resize(resolution * resolution);
  for (std::size_t i = 0; i < grid.cell_ids.size(); ++i) {
    Code c = code_of(net, grid.center(i));
    auto [it, inserted] = ids.try_emplace(c, static_cast<std::uint32_t>(grid.id_to_code.size()));
    if (inserted) grid.id_to_code.push_back(std::move(c));
    grid.cell_ids[i] = it->second;
  }
  grid.neighbor_pairs = neighbor_pairs(grid.cell_ids, resolution, [&](std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>(hamming(grid.id_to_code[a], grid.id_to_code[b]));
  });
  return grid;
}

}  // namespace reference

void write_grid(const GridTessellation& grid, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t res = grid.resolution;
  std::string csv;
  for (std::size_t y = 0; y < res; ++y) {
    for (std::size_t x = 0; x < res; ++x) {
      if (x) csv.push_back(',');
      csv += std::to_string(grid.cell_ids[y * res + x]);
    }
    csv.push_back('\n');
  }
  write_file(dir / "grid_ids.csv", csv);

  if (grid.id_to_code.size() <= 0x10000) {
    // Binary 16-bit PGM, top row = highest y.
    std::string pgm = "P5\n" + std::to_string(res) + " " + std::to_string(res) + "\n65535\n";
    for (std::size_t y = res; y-- > 0;) {
      for (std::size_t x = 0; x < res; ++x) {
        const auto v = static_cast<std::uint16_t>(grid.cell_ids[y * res + x]);
        pgm.push_back(static_cast<char>(v >> 8));
        pgm.push_back(static_cast<char>(v & 0xFF));
      }
    }
    write_file(dir / "grid_ids.pgm", pgm);
  }

  nlohmann::json codes = nlohmann::json::object();
  for (std::size_t id = 0; id < grid.id_to_code.size(); ++id) {
    codes[std::to_string(id)] = grid.id_to_code[id].to_string();
  }
  nlohmann::json doc;
  doc["bounds"] = {{grid.bounds[0].first, grid.bounds[0].second},
                   {grid.bounds[1].first, grid.bounds[1].second}};
  doc["resolution"] = res;
  doc["codes"] = std::move(codes);
  write_file(dir / "grid_codes.json", doc.dump(1) + "\n");

  std::string pairs = "id_a,id_b,hamming,pixel_pairs\n";
  for (const auto& p : grid.neighbor_pairs) {
    pairs += std::to_string(p.id_a) + "," + std::to_string(p.id_b) + "," +
             std::to_string(p.hamming) + "," + std::to_string(p.pixel_pairs) + "\n";
  }
  write_file(dir / "grid_pairs.csv", pairs);
}

}  // namespace relucode
