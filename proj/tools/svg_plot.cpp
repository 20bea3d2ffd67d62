#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace trajopt::cli {

namespace {

constexpr int kPanelWidth = 460;
constexpr int kPanelHeight = 340;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 36;
constexpr int kMarginBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void render_panel(std::ostringstream& os, const PlotSpec& spec, int x0, int y0) {
  const int plot_w = kPanelWidth - kMarginLeft - kMarginRight;
  const int plot_h = kPanelHeight - kMarginTop - kMarginBottom;
  const int left = x0 + kMarginLeft;
  const int top = y0 + kMarginTop;

  const auto transform_y = [&](double y) {
    return spec.log_y ? std::log10(y) : y;
  };

  Range xr, yr;
  for (const auto& s : spec.series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double y = s.y[i];
      if (spec.log_y && y <= 0.0) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      xr.include(s.x[i]);
      yr.include(transform_y(y));
    }
  }
  xr.pad();
  yr.pad();

  const auto px = [&](double x) {
    return left + plot_w * (x - xr.lo) / (xr.hi - xr.lo);
  };
  const auto py = [&](double y) {
    return top + plot_h * (1.0 - (transform_y(y) - yr.lo) / (yr.hi - yr.lo));
  };

  os << "<rect x='" << left << "' y='" << top << "' width='" << plot_w
     << "' height='" << plot_h << "' fill='none' stroke='#333'/>\n";
  os << "<text x='" << x0 + kPanelWidth / 2 << "' y='" << y0 + 20
     << "' text-anchor='middle' font-size='14'>" << spec.title << "</text>\n";
  os << "<text x='" << x0 + kPanelWidth / 2 << "' y='" << y0 + kPanelHeight - 10
     << "' text-anchor='middle' font-size='12'>" << spec.x_label << "</text>\n";
  os << "<text x='" << x0 + 14 << "' y='" << top + plot_h / 2
     << "' text-anchor='middle' font-size='12' transform='rotate(-90 " << x0 + 14
     << " " << top + plot_h / 2 << ")'>" << spec.y_label
     << (spec.log_y ? " (log scale)" : "") << "</text>\n";

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << "<text x='" << px(fx) << "' y='" << top + plot_h + 16
       << "' text-anchor='middle' font-size='10'>" << fmt(fx) << "</text>\n";
    const double label = spec.log_y ? std::pow(10.0, fy) : fy;
    const double ypix = top + plot_h * (1.0 - (fy - yr.lo) / (yr.hi - yr.lo));
    os << "<text x='" << left - 6 << "' y='" << ypix + 3
       << "' text-anchor='end' font-size='10'>" << fmt(label) << "</text>\n";
    os << "<line x1='" << left << "' y1='" << ypix << "' x2='" << left + plot_w
       << "' y2='" << ypix << "' stroke='#ddd' stroke-width='0.5'/>\n";
  }

  int color = 0;
  int legend_y = top + 14;
  for (const auto& s : spec.series) {
    const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<polyline fill='none' stroke='" << stroke << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_y && s.y[i] <= 0.0) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    os << "'/>\n";
    if (spec.series.size() > 1) {
      os << "<line x1='" << left + plot_w - 110 << "' y1='" << legend_y << "' x2='"
         << left + plot_w - 92 << "' y2='" << legend_y << "' stroke='" << stroke
         << "' stroke-width='2'/>\n";
      os << "<text x='" << left + plot_w - 86 << "' y='" << legend_y + 4
         << "' font-size='11'>" << s.label << "</text>\n";
      legend_y += 16;
    }
    ++color;
  }
}

}  // namespace

std::string render_svg(const std::vector<PlotSpec>& panels) {
  const int columns = panels.size() > 1 ? 2 : 1;
  const int rows = static_cast<int>((panels.size() + columns - 1) / columns);
  const int width = columns * kPanelWidth;
  const int height = rows * kPanelHeight;

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
     << height << "' font-family='sans-serif'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  for (size_t i = 0; i < panels.size(); ++i) {
    const int x0 = static_cast<int>(i % columns) * kPanelWidth;
    const int y0 = static_cast<int>(i / columns) * kPanelHeight;
    render_panel(os, panels[i], x0, y0);
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::string& path, const std::vector<PlotSpec>& panels) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot write " + path);
  file << render_svg(panels);
}

}  // namespace trajopt::cli
