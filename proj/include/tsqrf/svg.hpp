#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tsqrf::svg {

struct Line {
  std::string name;
  std::vector<double> values;
};

/// Line chart over a shared x axis. When `band_lower`/`band_upper` name two
/// of the lines, the region between them is shaded. Throws
/// std::invalid_argument on empty input or ragged lines.
std::string line_chart(const std::vector<double>& x, const std::vector<Line>& lines, const std::string& title,
                       int band_lower = -1, int band_upper = -1);

/// Histogram with `bins` equal-width bins spanning [min, max] of `values`.
std::string histogram(const std::vector<double>& values, std::size_t bins, const std::string& title);

/// Equal-width bin counts, the last bin closed on the right.
std::vector<std::size_t> bin_counts(const std::vector<double>& values, std::size_t bins, double lo, double hi);

}  // namespace tsqrf::svg
