// Small helpers shared by the text file formats.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rtc {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Git blob hash (SHA-1 over "blob <len>\0<content>"), hex encoded.
std::string git_blob_hash(std::string_view content);

}  // namespace rtc
