#pragma once

#include <string>
#include <vector>

namespace trajopt::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

/// Renders one or more panels side by side (two per row) into a static SVG.
std::string render_svg(const std::vector<PlotSpec>& panels);

void write_svg(const std::string& path, const std::vector<PlotSpec>& panels);

}  // namespace trajopt::cli
