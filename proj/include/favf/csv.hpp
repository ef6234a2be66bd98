// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace favf::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based line number in the source file for each row, for diagnostics.
  std::vector<std::size_t> line_numbers;

  /// Index of `name` in the header, or throws.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Lines starting with '#'
/// and blank lines are skipped.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source_name);

std::vector<std::string> split_line(std::string_view line);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Strict numeric parse; returns false on trailing garbage or empty text.
bool parse_double(std::string_view text, double& out);

}  // namespace favf::csv
