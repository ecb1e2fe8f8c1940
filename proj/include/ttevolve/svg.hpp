#pragma once

#include <string>
#include <vector>

#include "ttevolve/common.hpp"

namespace ttv {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  bool logy = false;
  bool has_href = false;
  double href = 0.0;  // dashed horizontal reference line
};

// Deterministic static SVG line plot; throws StructuralError when no
// series has a finite point.
void write_svg_plot(const std::string& path, const PlotSpec& spec);

// Inspect a trace/table CSV written by the runner and render the matching
// plot kind (energy trace, error trace, marginal table).
void plot_csv(const std::string& csv_path, const std::string& out_path);

}  // namespace ttv
