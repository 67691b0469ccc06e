#pragma once

#include <string>
#include <vector>

#include "granlab/harness.hpp"

namespace granlab {

enum class AxisScale { Linear, Log2 };

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct PlotSeries {
  std::string name;
  std::string color;
  std::string marker;  // circle, square, triangle
  std::vector<PlotPoint> points;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  AxisScale x_scale = AxisScale::Linear;
  bool zero_line = false;
  std::vector<PlotSeries> series;

  // Throws ConfigError on non-finite coordinates or low > y > high.
  void validate() const;
};

std::string render_svg(const PlotSpec& spec);

// Fine and coarse accuracy curves on a log2 x axis (linear if some axis value
// is not positive).
PlotSpec accuracy_vs_size_plot(const std::vector<AggregatedPoint>& points);
// Delta with spread bars and a zero reference line. Log2 x axis when every
// value is positive and they span more than a factor of 8.
PlotSpec delta_vs_axis_plot(const std::vector<AggregatedPoint>& points);

}  // namespace granlab
