#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsqrf::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by exact header name, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Splits one record on commas. Double-quoted fields may contain commas and
/// "" escapes. Surrounding whitespace is trimmed from unquoted fields.
std::vector<std::string> split_record(std::string_view line);

/// Reads a headed CSV. Blank lines are skipped. Throws std::runtime_error on
/// an empty stream.
Table read(std::istream& in);
Table read_file(const std::string& path);

/// Strict decimal parse of a whole cell; nullopt for empty or malformed
/// cells and for non-finite values.
std::optional<double> parse_double(std::string_view cell);

/// Shortest round-trip decimal form of a double ("%.17g" trimmed).
std::string format_exact(double value);

/// Compact form used in column headers such as q_0.975.
std::string format_level(double tau);

}  // namespace tsqrf::csv
