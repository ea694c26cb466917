#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/// Minimal comma-separated reader/writer used by the panel and draw tables.
namespace growfn::csv {

using Row = std::vector<std::string>;

/// Splits every non-blank line on commas; fields are trimmed and unquoted.
std::vector<Row> read_file(const std::filesystem::path& path);
Row split_line(std::string_view line);

/// "NA" (any case) or an empty field.
bool is_missing(std::string_view cell);
std::optional<double> parse_number(std::string_view cell);

/// Shortest form that round-trips the double exactly (up to 17 significant digits).
std::string format_number(double x);

}  // namespace growfn::csv
