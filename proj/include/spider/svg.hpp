#pragma once

#include <string>
#include <vector>

namespace spider::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
  bool markers = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // non-positive y values are dropped on a log axis
  int width = 640;
  int height = 420;
};

// Self-contained SVG document with axes, ticks and one polyline/marker set
// per series. Output depends only on the inputs.
std::string render(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace spider::svg
