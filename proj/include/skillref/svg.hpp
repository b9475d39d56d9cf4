#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace skillref::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional half-width drawn around y
  std::string color{"#1f6fb4"};
};

/// Plain static line chart; enough to eyeball learning curves.
inline void write_line_chart(const std::filesystem::path& path,
                             const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<Series>& series) {
  constexpr double width = 760, height = 480;
  constexpr double left = 72, right = 24, top = 48, bottom = 56;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("svg series: x/y size mismatch");
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double half =
          s.band.size() == s.y.size() ? std::abs(s.band[i]) : 0.0;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i] - half);
      y_max = std::max(y_max, s.y[i] + half);
    }
  }
  if (!std::isfinite(x_min) || !std::isfinite(y_min))
    throw std::invalid_argument("svg: no finite data to plot");
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  const auto sx = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * plot_w;
  };
  const auto sy = [&](double y) {
    return top + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;
  };

  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' viewBox='0 0 " << width << " " << height
      << "'>\n";
  out << "<rect width='" << width << "' height='" << height
      << "' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='28' text-anchor='middle' "
      << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";

  // axes
  out << "<rect x='" << left << "' y='" << top << "' width='" << plot_w
      << "' height='" << plot_h << "' fill='none' stroke='#444'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    out << "<text x='" << sx(fx) << "' y='" << height - bottom + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << fx << "</text>\n";
    out << "<text x='" << left - 8 << "' y='" << sy(fy) + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << fy
        << "</text>\n";
  }
  out << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
      << x_label << "</text>\n";
  out << "<text x='18' y='" << height / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
      << "transform='rotate(-90 18 " << height / 2 << ")'>" << y_label
      << "</text>\n";

  int legend_row = 0;
  for (const Series& s : series) {
    if (s.band.size() == s.y.size() && !s.y.empty()) {
      out << "<polygon fill='" << s.color << "' fill-opacity='0.18' "
          << "stroke='none' points='";
      for (size_t i = 0; i < s.x.size(); ++i)
        out << sx(s.x[i]) << "," << sy(s.y[i] + std::abs(s.band[i])) << " ";
      for (size_t i = s.x.size(); i-- > 0;)
        out << sx(s.x[i]) << "," << sy(s.y[i] - std::abs(s.band[i])) << " ";
      out << "'/>\n";
    }
    out << "<polyline fill='none' stroke='" << s.color
        << "' stroke-width='1.8' points='";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    out << "'/>\n";
    const double ly = top + 16 + 18 * legend_row++;
    out << "<line x1='" << left + plot_w - 150 << "' y1='" << ly << "' x2='"
        << left + plot_w - 126 << "' y2='" << ly << "' stroke='" << s.color
        << "' stroke-width='3'/>\n";
    out << "<text x='" << left + plot_w - 120 << "' y='" << ly + 4
        << "' font-family='sans-serif' font-size='12'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace skillref::svg
