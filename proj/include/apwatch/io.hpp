#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace apwatch {

/// Writes `content` to `<path>.tmp` and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

/// Comma-separated rows; the first row must equal `expected_header`.
std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& expected_header,
                                               const std::string& origin);

std::string format_fixed(double value, int decimals);

/// Round-trippable decimal representation (17 significant digits).
std::string format_exact(double value);

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

}  // namespace apwatch
