#include "tsqrf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tsqrf::svg {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

void widen(double& lo, double& hi) {
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void open_svg(std::ostringstream& out, const std::string& title, const Frame& f) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << escape(title) << "</text>\n";
  out << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
      << kHeight - kMargin << "\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\"/>\n</g>\n";
  out << "<g class=\"labels\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\">" << fmt(f.x0) << "</text>\n"
      << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\" text-anchor=\"end\">"
      << fmt(f.x1) << "</text>\n"
      << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << fmt(f.y0)
      << "</text>\n"
      << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4 << "\" text-anchor=\"end\">" << fmt(f.y1)
      << "</text>\n</g>\n";
}

}  // namespace

std::string line_chart(const std::vector<double>& x, const std::vector<Line>& lines, const std::string& title,
                       int band_lower, int band_upper) {
  if (x.empty() || lines.empty()) throw std::invalid_argument("line chart needs data");
  for (const auto& l : lines) {
    if (l.values.size() != x.size()) throw std::invalid_argument("line '" + l.name + "' length mismatch");
  }
  const auto nlines = static_cast<int>(lines.size());
  const bool band = band_lower >= 0 && band_upper >= 0;
  if (band && (band_lower >= nlines || band_upper >= nlines)) throw std::invalid_argument("band index out of range");

  Frame f{*std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end()), 0.0, 0.0};
  f.y0 = lines[0].values[0];
  f.y1 = f.y0;
  for (const auto& l : lines) {
    for (double v : l.values) {
      if (std::isnan(v)) continue;
      f.y0 = std::min(f.y0, v);
      f.y1 = std::max(f.y1, v);
    }
  }
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);

  std::ostringstream out;
  open_svg(out, title, f);
  if (band) {
    const auto& lo = lines[static_cast<std::size_t>(band_lower)].values;
    const auto& hi = lines[static_cast<std::size_t>(band_upper)].values;
    out << "<polygon class=\"band\" fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) out << fmt(f.px(x[i])) << ',' << fmt(f.py(hi[i])) << ' ';
    for (std::size_t i = x.size(); i-- > 0;) out << fmt(f.px(x[i])) << ',' << fmt(f.py(lo[i])) << ' ';
    out << "\"/>\n";
  }
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const char* color = kPalette[li % std::size(kPalette)];
    out << "<polyline class=\"line\" data-name=\"" << escape(lines[li].name) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::isnan(lines[li].values[i])) continue;
      out << fmt(f.px(x[i])) << ',' << fmt(f.py(lines[li].values[i])) << ' ';
    }
    out << "\"/>\n";
    out << "<text class=\"legend\" x=\"" << kWidth - kMargin + 4 << "\" y=\"" << kMargin + 14.0 * static_cast<double>(li)
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" << color << "\">" << escape(lines[li].name)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::size_t> bin_counts(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>(std::floor((v - lo) / width)) : 0;
    counts[std::min(b, bins - 1)]++;
  }
  return counts;
}

std::string histogram(const std::vector<double>& values, std::size_t bins, const std::string& title) {
  if (values.empty()) throw std::invalid_argument("histogram needs data");
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  widen(lo, hi);
  const auto counts = bin_counts(values, bins, lo, hi);
  const double top = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  Frame f{lo, hi, 0.0, top};

  std::ostringstream out;
  open_svg(out, title, f);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double left = f.px(lo + width * static_cast<double>(b));
    const double right = f.px(lo + width * static_cast<double>(b + 1));
    const double y = f.py(static_cast<double>(counts[b]));
    out << "<rect class=\"bar\" data-count=\"" << counts[b] << "\" x=\"" << fmt(left) << "\" y=\"" << fmt(y)
        << "\" width=\"" << fmt(right - left) << "\" height=\"" << fmt(kHeight - kMargin - y)
        << "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace tsqrf::svg
