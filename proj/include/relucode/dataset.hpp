#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relucode/network.hpp"

namespace relucode {

struct Dataset {
  PointMatrix points;       // one sample per row
  std::vector<int> labels;  // empty when unlabeled

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
  bool labeled() const { return !labels.empty(); }
};

/// CSV with header "x1,...,xm[,label]".
Dataset parse_dataset_csv(std::string_view text);
std::string to_dataset_csv(const Dataset& data);

/// RCD-F32: magic "RCDF", u32 rows, u32 cols, rows*cols f32 row-major (widened on load).
Dataset parse_dataset_f32(std::string_view bytes);
std::string to_dataset_f32(const Dataset& data);

/// One integer label per line.
std::vector<int> parse_labels(std::string_view text);

/// Auto-detects the binary magic, otherwise CSV. A labels file, if given,
/// replaces any label column.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::filesystem::path>& labels = std::nullopt);

}  // namespace relucode
