#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace levnoise {

/// Shortest decimal that re-parses to the identical double.
std::string format_double(double value);

/// Whole-string decimal/scientific parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  // column-major

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Parses a numeric CSV whose first line is a header. If `expected_header`
/// is non-empty the header must match it exactly. Errors are ConfigError
/// with the 1-based line number.
NumericTable parse_numeric_csv(std::string_view text,
                               std::span<const std::string_view> expected_header = {});

std::string format_csv(std::span<const std::string_view> header,
                       std::span<const std::span<const double>> columns);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace levnoise
