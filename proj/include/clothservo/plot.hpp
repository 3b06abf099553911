#pragma once

#include <string>
#include <vector>

#include "clothservo/image.hpp"

namespace clothservo {

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  Rgb color{0.1, 0.3, 0.8};
  bool lines = true;  ///< false: markers only
};

struct PlotSpec {
  std::vector<PlotSeries> series;
  bool log_x = false;
  bool identity_line = false;  ///< dashed y = x, for predicted-vs-actual plots
  int width = 480;
  int height = 320;
};

/// White canvas, axes with numeric tick labels, one color per series.
/// Throws ParameterError on empty input or non-positive x with log_x.
Image draw_plot(const PlotSpec& spec);

}  // namespace clothservo
