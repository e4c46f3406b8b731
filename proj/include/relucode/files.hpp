#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace relucode {

/// Reads a whole file; throws FileError on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes verbatim (binary mode); throws FileError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace relucode
