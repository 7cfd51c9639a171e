#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/io/csv.hpp"

// Minimal line and bar charts written as standalone SVG.

namespace matchmarket::io {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the line
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  double width = 640;
  double height = 400;
};

namespace detail {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  double left = 70, right = 150, top = 40, bottom = 50;
  double w = 640, h = 400;
  bool log_x = false;

  double px(double x) const {
    const double a = log_x ? std::log10(x0) : x0;
    const double b = log_x ? std::log10(x1) : x1;
    const double v = log_x ? std::log10(x) : x;
    return left + (b > a ? (v - a) / (b - a) : 0.5) * (w - left - right);
  }
  double py(double y) const {
    return h - bottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (h - top - bottom);
  }
};

inline void axes(std::ofstream& out, const Frame& f, const PlotSpec& spec) {
  out << "<rect x='0' y='0' width='" << spec.width << "' height='" << spec.height
      << "' fill='white'/>\n";
  out << "<text x='" << spec.width / 2 << "' y='22' text-anchor='middle' font-size='15'>"
      << escape(spec.title) << "</text>\n";
  const double xb = f.h - f.bottom;
  out << "<line x1='" << f.left << "' y1='" << xb << "' x2='" << f.w - f.right << "' y2='" << xb
      << "' stroke='black'/>\n";
  out << "<line x1='" << f.left << "' y1='" << f.top << "' x2='" << f.left << "' y2='" << xb
      << "' stroke='black'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    const double xv = f.log_x ? std::pow(10.0, std::log10(f.x0) + t * (std::log10(f.x1) - std::log10(f.x0)))
                              : f.x0 + t * (f.x1 - f.x0);
    const double yv = f.y0 + t * (f.y1 - f.y0);
    out << "<text x='" << f.px(xv) << "' y='" << xb + 16 << "' text-anchor='middle' font-size='11'>"
        << format_double(xv, 3) << "</text>\n";
    out << "<text x='" << f.left - 6 << "' y='" << f.py(yv) + 4
        << "' text-anchor='end' font-size='11'>" << format_double(yv, 3) << "</text>\n";
  }
  out << "<text x='" << (f.left + f.w - f.right) / 2 << "' y='" << f.h - 10
      << "' text-anchor='middle' font-size='12'>" << escape(spec.x_label) << "</text>\n";
  out << "<text x='16' y='" << (f.top + xb) / 2 << "' font-size='12' transform='rotate(-90 16 "
      << (f.top + xb) / 2 << ")' text-anchor='middle'>" << escape(spec.y_label) << "</text>\n";
}

inline void legend(std::ofstream& out, const Frame& f, const std::vector<Series>& series) {
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = f.top + 18.0 * static_cast<double>(k);
    const double x = f.w - f.right + 12;
    out << "<line x1='" << x << "' y1='" << y << "' x2='" << x + 20 << "' y2='" << y
        << "' stroke='" << series[k].color << "' stroke-width='2'"
        << (series[k].dashed ? " stroke-dasharray='5,3'" : "") << "/>\n";
    out << "<text x='" << x + 26 << "' y='" << y + 4 << "' font-size='11'>"
        << escape(series[k].label) << "</text>\n";
  }
}

}  // namespace detail

inline void write_line_plot(const std::filesystem::path& path, const PlotSpec& spec,
                            const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::DimensionMismatch, "series x/y length differ");
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isnan(s.y[k]) || (spec.log_x && !(s.x[k] > 0))) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const double pad = (y1 - y0) > 0 ? 0.05 * (y1 - y0) : 0.5;
  detail::Frame f;
  f.x0 = x0;
  f.x1 = x1;
  f.y0 = y0 - pad;
  f.y1 = y1 + pad;
  f.w = spec.width;
  f.h = spec.height;
  f.log_x = spec.log_x;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidParameter, "cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << spec.width << "' height='"
      << spec.height << "' font-family='sans-serif'>\n";
  detail::axes(out, f, spec);
  for (const auto& s : series) {
    std::string points;
    auto flush = [&] {
      if (points.empty()) return;
      out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='2'"
          << (s.dashed ? " stroke-dasharray='5,3'" : "") << " points='" << points << "'/>\n";
      points.clear();
    };
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (std::isnan(s.y[k])) {
        flush();
        continue;
      }
      points += format_double(f.px(s.x[k]), 6) + "," + format_double(f.py(s.y[k]), 6) + " ";
      out << "<circle cx='" << format_double(f.px(s.x[k]), 6) << "' cy='"
          << format_double(f.py(s.y[k]), 6) << "' r='2.5' fill='" << s.color << "'/>\n";
    }
    flush();
  }
  detail::legend(out, f, series);
  out << "</svg>\n";
}

/// Grouped bar chart: one group per category, one bar per series.
inline void write_bar_plot(const std::filesystem::path& path, const PlotSpec& spec,
                           const std::vector<std::string>& categories,
                           const std::vector<Series>& series) {
  double y1 = 0.0;
  for (const auto& s : series) {
    if (s.y.size() != categories.size()) throw Error(ErrorCode::DimensionMismatch, "bar series length");
    for (double v : s.y) y1 = std::max(y1, v);
  }
  if (y1 <= 0) y1 = 1;
  detail::Frame f;
  f.x1 = static_cast<double>(categories.size());
  f.y1 = y1 * 1.05;
  f.w = spec.width;
  f.h = spec.height;
  f.log_x = false;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidParameter, "cannot write " + path.string());
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << spec.width << "' height='"
      << spec.height << "' font-family='sans-serif'>\n";
  detail::axes(out, f, spec);
  const double group = f.px(1.0) - f.px(0.0);
  const double bar = 0.8 * group / static_cast<double>(std::max<std::size_t>(1, series.size()));
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t c = 0; c < categories.size(); ++c) {
      const double x = f.px(static_cast<double>(c)) + 0.1 * group + bar * static_cast<double>(s);
      const double top = f.py(series[s].y[c]);
      out << "<rect x='" << format_double(x, 6) << "' y='" << format_double(top, 6) << "' width='"
          << format_double(bar, 6) << "' height='" << format_double(f.py(0.0) - top, 6)
          << "' fill='" << series[s].color << "'/>\n";
    }
  }
  detail::legend(out, f, series);
  out << "</svg>\n";
}

}  // namespace matchmarket::io
