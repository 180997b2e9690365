#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cfn {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

double parse_double(std::string_view text); // ArgumentError on trailing junk

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames over the target, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace cfn
