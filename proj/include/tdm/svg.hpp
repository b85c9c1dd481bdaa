#pragma once

// Minimal standalone SVG charts. Output depends only on the inputs, so equal
// data gives byte-identical files.

#include <string>
#include <vector>

#include "tdm/types.hpp"

namespace tdm::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PointLayer {
  std::string label;
  Samples points;  // first two columns are plotted
};

struct Bounds {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       bool log_y = false);

std::string scatter_chart(const std::string& title, const std::vector<PointLayer>& layers,
                          const Bounds& bounds);

}  // namespace tdm::svg
