#include "relucode/dataset.hpp"

#include <charconv>
#include <cstdio>

#include "relucode/binary_io.hpp"
#include "relucode/errors.hpp"
#include "relucode/files.hpp"

namespace relucode {

namespace {

constexpr std::string_view kF32Magic = "RCDF";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(sep, start);
    auto field = line.substr(start, end == std::string_view::npos ? line.npos : end - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, std::size_t col) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                         ": cannot parse '" + std::string(field) + "'",
                     line_no);
  }
  return value;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = end + 1;
  }
  return out;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  const auto lines = lines_of(text);
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) ++first;
  if (first == lines.size()) {
    throw ValidationError("empty dataset");
  }
  const auto header = split(lines[first], ',');
  std::size_t dim = 0;
  bool has_label = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label" && c + 1 == header.size()) {
      has_label = true;
    } else if (header[c] == "x" + std::to_string(c + 1)) {
      ++dim;
    } else {
      throw ParseError("line " + std::to_string(first + 1) + ": header column " +
                           std::to_string(c + 1) + " is '" + std::string(header[c]) +
                           "', expected x" + std::to_string(c + 1) + " or a final 'label'",
                       first + 1);
    }
  }
  if (dim == 0) {
    throw ParseError("line " + std::to_string(first + 1) + ": header has no x columns", first + 1);
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  for (std::size_t l = first + 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    const auto fields = split(lines[l], ',');
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(l + 1) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       l + 1);
    }
    for (std::size_t c = 0; c < dim; ++c) values.push_back(parse_number<double>(fields[c], l + 1, c));
    if (has_label) labels.push_back(parse_number<int>(fields[dim], l + 1, dim));
    ++rows;
  }
  if (rows == 0) {
    throw ValidationError("empty dataset");
  }
  Dataset data;
  data.points = Eigen::Map<PointMatrix>(values.data(), static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(dim));
  data.labels = std::move(labels);
  return data;
}

std::string to_dataset_csv(const Dataset& data) {
  std::string out;
  for (std::size_t c = 0; c < data.dim(); ++c) {
    if (c) out.push_back(',');
    out += "x" + std::to_string(c + 1);
  }
  if (data.labeled()) out += ",label";
  out.push_back('\n');
  char buf[32];
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index c = 0; c < data.points.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%s%.17g", c ? "," : "", data.points(i, c));
      out += buf;
    }
    if (data.labeled()) out += "," + std::to_string(data.labels[static_cast<std::size_t>(i)]);
    out.push_back('\n');
  }
  return out;
}

Dataset parse_dataset_f32(std::string_view bytes) {
  detail::ByteReader in(bytes, "RCD-F32");
  in.expect_magic(kF32Magic);
  const auto rows = in.get<std::uint32_t>();
  const auto cols = in.get<std::uint32_t>();
  if (static_cast<std::size_t>(rows) * cols * sizeof(float) != in.remaining()) {
    throw ParseError("RCD-F32: header declares " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " but payload has " +
                         std::to_string(in.remaining()) + " bytes",
                     in.position());
  }
  if (rows == 0 || cols == 0) {
    throw ValidationError("empty dataset");
  }
  Dataset data;
  data.points.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      data.points(i, j) = static_cast<double>(in.get<float>());
    }
  }
  return data;
}

std::string to_dataset_f32(const Dataset& data) {
  std::string out(kF32Magic);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.points.cols(); ++j) {
      detail::put<float>(out, static_cast<float>(data.points(i, j)));
    }
  }
  return out;
}

std::vector<int> parse_labels(std::string_view text) {
  std::vector<int> out;
  const auto lines = lines_of(text);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    auto line = split(lines[l], ',').front();
    if (line.empty() || line == "label") continue;
    out.push_back(parse_number<int>(line, l + 1, 0));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<std::filesystem::path>& labels) {
  const std::string bytes = read_file(path);
  Dataset data;
  try {
    data = bytes.starts_with(kF32Magic) ? parse_dataset_f32(bytes) : parse_dataset_csv(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.location());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (labels) {
    try {
      data.labels = parse_labels(read_file(*labels));
    } catch (const ParseError& e) {
      throw ParseError(labels->string() + ": " + e.what(), e.location());
    }
    if (data.labels.size() != data.size()) {
      throw ValidationError(labels->string() + ": " + std::to_string(data.labels.size()) +
                            " labels for " + std::to_string(data.size()) + " samples");
    }
  }
  return data;
}

}  // namespace relucode
