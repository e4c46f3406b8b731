#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relucode/codes.hpp"
#include "relucode/dataset.hpp"
#include "relucode/network.hpp"
#include "relucode/parallel.hpp"

namespace relucode {

// ---- census --------------------------------------------------------------

struct CellStats {
  std::size_t count = 0;
  std::map<int, std::size_t> per_class_counts;
  std::size_t correct_count = 0;
  bool operator==(const CellStats&) const = default;
};

struct CellCensus {
  std::map<Code, CellStats> entries;
  std::size_t dataset_size = 0;
  std::optional<int> epoch_tag;

  std::size_t distinct_codes() const { return entries.size(); }
  /// Number of cells holding at least one correctly classified point.
  std::size_t distinct_codes_correct() const;
};

/// Occupancy of the cells visited by `data`. Per-class counts need labels;
/// correct counts need both labels and predictions.
CellCensus census(const ReluNetwork& net, const Dataset& data,
                  const std::optional<std::vector<int>>& predictions = std::nullopt);

/// Trailing digits of the file stem ("epoch_0007.rcw" -> 7), if any.
std::optional<int> epoch_from_filename(const std::filesystem::path& path);

/// One census per checkpoint, in order. Every checkpoint must share the
/// first one's layer widths. epoch_tag comes from the filename, falling back
/// to the 1-based position.
std::vector<CellCensus> census_series(
    const std::vector<std::filesystem::path>& checkpoints, const Dataset& data,
    const std::optional<std::vector<std::vector<int>>>& predictions_per_checkpoint = std::nullopt);

/// "epoch,distinct_codes,distinct_codes_correct,dataset_size" rows.
std::string census_summary_csv(const std::vector<CellCensus>& series);
/// Per-cell listing: code, count, correct_count, per-class counts.
std::string census_cells_csv(const CellCensus& census);

// ---- adjacency -----------------------------------------------------------------

struct AdjacencyGraph {
  std::vector<Code> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, ascending
};

/// Nodes are the distinct input codes in first-seen order; edges join codes
/// at Hamming distance exactly 1. `theta` is the early-exit threshold used
/// for pair screening and must be at least 2.
AdjacencyGraph adjacency_graph(const std::vector<Code>& codes, std::size_t theta = 2);
std::string to_json(const AdjacencyGraph& graph);

// ---- distance matrices -------------------------------------------------------------

inline constexpr std::size_t kDefaultMaxMatrixCodes = 20000;

struct DistanceMatrix {
  std::size_t n = 0;
  std::size_t bits = 0;
  Threshold theta = Threshold::infinite();
  std::vector<std::uint32_t> values;  // row-major n x n

  std::uint32_t at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  /// Largest value the matrix can hold: min(theta, bits).
  std::size_t max_value() const;
};

DistanceMatrix distance_matrix(const std::vector<Code>& codes, Threshold theta,
                               std::size_t max_codes = kDefaultMaxMatrixCodes);

std::string to_distance_csv(const DistanceMatrix& matrix);
/// RCD1: magic, u32 n, n*n u16. Throws ValidationError if max_value() > 65535.
std::string to_distance_binary(const DistanceMatrix& matrix);
DistanceMatrix parse_distance_binary(std::string_view bytes);

enum class MatrixFormat { csv, binary };
/// Writes the matrix; binary falls back to CSV when u16 cannot hold it.
/// Returns the format actually written.
MatrixFormat write_distance_matrix(const DistanceMatrix& matrix, const std::filesystem::path& path,
                                   MatrixFormat requested);

// ---- 2-D grid oracle ------------------------------------------------------------------

struct GridNeighborPair {
  std::uint32_t id_a;  // id_a < id_b
  std::uint32_t id_b;
  std::uint32_t hamming;
  std::size_t pixel_pairs;       // 4-neighbor pixel pairs with this id pair
  std::array<std::size_t, 2> sample_pixels;  // one such pair, as flat grid indices
};

struct GridTessellation {
  std::array<std::pair<double, double>, 2> bounds;  // (low, high) per axis
  std::size_t resolution = 0;
  std::vector<std::uint32_t> cell_ids;  // resolution^2, row y-major: index = iy * res + ix
  std::vector<Code> id_to_code;         // ids in first-seen scan order
  std::vector<GridNeighborPair> neighbor_pairs;

  /// Sample point (pixel center) of a flat grid index.
  Eigen::VectorXd center(std::size_t index) const;
};

/// Samples pixel centers of a resolution x resolution grid over `bounds`.
/// Throws UnsupportedDimensionError unless input_dim == 2.
GridTessellation grid_tessellation(const ReluNetwork& net,
                                   const std::array<std::pair<double, double>, 2>& bounds,
                                   std::size_t resolution);

/// Writes grid_ids.csv, grid_ids.pgm (when ids fit 16 bits), grid_codes.json
/// and grid_pairs.csv into `dir`.
void write_grid(const GridTessellation& grid, const std::filesystem::path& dir);

namespace reference {
/// Per-pixel code_of with an ordered map for compaction.
GridTessellation grid_tessellation(const ReluNetwork& net,
                                   const std::array<std::pair<double, double>, 2>& bounds,
                                   std::size_t resolution);
}  // namespace reference

}  // namespace relucode
