#include "mkl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mkl/io.hpp"

namespace mkl {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;   // data ranges (log10)
  double px0 = 70, px1 = 560, py0 = 40, py1 = 360;
  double X(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
  double Y(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

}  // namespace

std::string rate_plot_svg(const RateResult& result) {
  std::ostringstream s;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (long n : result.grid) {
    xmin = std::min(xmin, std::log10(static_cast<double>(n)));
    xmax = std::max(xmax, std::log10(static_cast<double>(n)));
  }
  for (const auto& [method, med] : result.median_errors)
    for (double e : med)
      if (e > 0 && std::isfinite(e)) {
        ymin = std::min(ymin, std::log10(e));
        ymax = std::max(ymax, std::log10(e));
      }
  if (!(ymin < ymax)) { ymin = -1; ymax = 0; }
  Frame f{xmin - 0.05, xmax + 0.05, ymin - 0.2, ymax + 0.2};

  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"620\" height=\"420\" "
       "font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect x=\"" << f.px0 << "\" y=\"" << f.py0 << "\" width=\"" << (f.px1 - f.px0)
    << "\" height=\"" << (f.py1 - f.py0) << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (long n : result.grid) {
    const double x = f.X(std::log10(static_cast<double>(n)));
    s << "<line x1=\"" << x << "\" y1=\"" << f.py1 << "\" x2=\"" << x << "\" y2=\""
      << f.py1 + 5 << "\" stroke=\"#333\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << f.py1 + 18 << "\" text-anchor=\"middle\">" << n
      << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(f.y0)); e <= static_cast<int>(std::floor(f.y1));
       ++e) {
    const double y = f.Y(e);
    s << "<line x1=\"" << f.px0 - 5 << "\" y1=\"" << y << "\" x2=\"" << f.px0
      << "\" y2=\"" << y << "\" stroke=\"#333\"/>\n";
    s << "<text x=\"" << f.px0 - 8 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  s << "<text x=\"" << 0.5 * (f.px0 + f.px1) << "\" y=\"" << f.py1 + 34
    << "\" text-anchor=\"middle\">n</text>\n";
  s << "<text x=\"16\" y=\"" << 0.5 * (f.py0 + f.py1)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << 0.5 * (f.py0 + f.py1) << ")\">median squared L2 error</text>\n";

  int ci = 0;
  double legend_y = f.py0 + 14;
  for (const auto& [method, med] : result.median_errors) {
    const char* color = kColors[ci % 5];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < med.size(); ++i) {
      if (!(med[i] > 0) || !std::isfinite(med[i])) continue;
      const double x = std::log10(static_cast<double>(result.grid[i]));
      const double y = std::log10(med[i]);
      s << "<circle cx=\"" << f.X(x) << "\" cy=\"" << f.Y(y) << "\" r=\"3.5\" fill=\""
        << color << "\"/>\n";
      sx += x; sy += y; sxx += x * x; sxy += x * y; ++m;
    }
    if (m >= 2) {
      const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
      const double icept = (sy - slope * sx) / m;
      s << "<line x1=\"" << f.X(f.x0) << "\" y1=\"" << f.Y(icept + slope * f.x0)
        << "\" x2=\"" << f.X(f.x1) << "\" y2=\"" << f.Y(icept + slope * f.x1)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
      auto it = result.predicted_slope.find(method);
      if (it != result.predicted_slope.end() && std::isfinite(it->second)) {
        // Predicted line anchored at the rightmost fitted point.
        const double ps = it->second;  // slope in ln n == slope in log10 n
        const double ax = f.x1 - 0.05, ay = icept + slope * ax;
        s << "<line x1=\"" << f.X(f.x0) << "\" y1=\"" << f.Y(ay + ps * (f.x0 - ax))
          << "\" x2=\"" << f.X(ax) << "\" y2=\"" << f.Y(ay) << "\" stroke=\"" << color
          << "\" stroke-dasharray=\"5,4\"/>\n";
      }
    }
    s << "<rect x=\"" << f.px1 - 150 << "\" y=\"" << legend_y - 9
      << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    s << "<text x=\"" << f.px1 - 135 << "\" y=\"" << legend_y << "\">" << method
      << " (slope " << format_double(std::round(result.fitted_slope.at(method) * 1000) / 1000)
      << ")</text>\n";
    legend_y += 16;
    ++ci;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace mkl
