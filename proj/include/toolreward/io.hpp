#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace toolreward {

/// Whole-file read; throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// Truncating write; throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

}  // namespace toolreward
