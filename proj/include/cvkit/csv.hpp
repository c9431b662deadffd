#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Minimal CSV helpers shared by the file formats. Fields never contain
// commas or quotes in any format this library writes, so no quoting.
namespace cvkit::csv {

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string join(const std::vector<std::string>& fields, char sep = ',');

// Shortest representation that parses back to the identical double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

// Splits on '\n', dropping '\r' and a trailing empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename, so readers observe either
// the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string trim(std::string_view text);

}  // namespace cvkit::csv
