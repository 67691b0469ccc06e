#include "granlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "granlab/errors.hpp"

namespace granlab {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 450.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

struct Frame {
  double x0, x1, y0, y1;
  AxisScale xs;

  double tx(double x) const {
    const double a = xs == AxisScale::Log2 ? std::log2(x) : x;
    const double lo = xs == AxisScale::Log2 ? std::log2(x0) : x0;
    const double hi = xs == AxisScale::Log2 ? std::log2(x1) : x1;
    return kLeft + (a - lo) / (hi - lo) * (kWidth - kLeft - kRight);
  }
  double ty(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void marker(std::ostringstream& svg, const std::string& shape, double x, double y, const std::string& color) {
  if (shape == "square") {
    svg << "<rect x=\"" << num(x - 4) << "\" y=\"" << num(y - 4) << "\" width=\"8\" height=\"8\" fill=\"" << color
        << "\"/>\n";
  } else if (shape == "triangle") {
    svg << "<polygon points=\"" << num(x) << "," << num(y - 5) << " " << num(x - 5) << "," << num(y + 4) << " "
        << num(x + 5) << "," << num(y + 4) << "\" fill=\"" << color << "\"/>\n";
  } else {
    svg << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
  }
}

// Standard-error bars are symmetric about the mean; quartile bars go with the
// median.
double center_for(double mean, double median, double low, double high) {
  return std::abs(0.5 * (low + high) - mean) < 1e-9 ? mean : median;
}

}  // namespace

void PlotSpec::validate() const {
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.low) || !std::isfinite(p.high)) {
        throw ConfigError("plot series '" + s.name + "' has a non-finite coordinate");
      }
      if (p.low > p.y || p.y > p.high) {
        throw ConfigError("plot series '" + s.name + "' has a point outside its spread bounds");
      }
      if (x_scale == AxisScale::Log2 && p.x <= 0.0) {
        throw ConfigError("log2 axis needs positive x values");
      }
    }
  }
}

std::string render_svg(const PlotSpec& spec) {
  spec.validate();
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series) {
    for (const auto& p : s.points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.low);
      y1 = std::max(y1, p.high);
    }
  }
  const bool empty = !std::isfinite(x0);
  if (empty) {
    x0 = spec.x_scale == AxisScale::Log2 ? 1.0 : 0.0;
    x1 = spec.x_scale == AxisScale::Log2 ? 2.0 : 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (spec.zero_line) {
    y0 = std::min(y0, 0.0);
    y1 = std::max(y1, 0.0);
  }
  if (x1 <= x0) {
    if (spec.x_scale == AxisScale::Log2) {
      x0 /= 2.0;
      x1 *= 2.0;
    } else {
      x0 -= 1.0;
      x1 += 1.0;
    }
  }
  if (y1 <= y0) {
    y0 -= 0.05;
    y1 += 0.05;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  if (spec.x_scale == AxisScale::Linear && !empty) {
    const double xpad = 0.03 * (x1 - x0);
    x0 -= xpad;
    x1 += xpad;
  }
  const Frame f{x0, x1, y0, y1, spec.x_scale};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << num(kWidth / 2 - kRight / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(spec.title) << "</text>\n";
  }

  // Axes box.
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kWidth - kLeft - kRight)
      << "\" height=\"" << num(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Y ticks.
  const double ystep = nice_step(y1 - y0, 6);
  for (double y = std::ceil(y0 / ystep) * ystep; y <= y1 + 1e-12; y += ystep) {
    const double v = std::abs(y) < ystep * 1e-9 ? 0.0 : y;
    svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(f.ty(v)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
        << num(f.ty(v)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(f.ty(v) + 4) << "\" text-anchor=\"end\">"
        << tick_label(v) << "</text>\n";
  }

  // X ticks.
  std::vector<double> xticks;
  if (spec.x_scale == AxisScale::Log2) {
    for (double e = std::ceil(std::log2(x0)); e <= std::floor(std::log2(x1)); e += 1.0) xticks.push_back(std::exp2(e));
  } else {
    const double xstep = nice_step(x1 - x0, 6);
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-12; x += xstep) {
      xticks.push_back(std::abs(x) < xstep * 1e-9 ? 0.0 : x);
    }
  }
  for (double x : xticks) {
    svg << "<line x1=\"" << num(f.tx(x)) << "\" y1=\"" << num(kHeight - kBottom) << "\" x2=\"" << num(f.tx(x))
        << "\" y2=\"" << num(kHeight - kBottom + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(f.tx(x)) << "\" y=\"" << num(kHeight - kBottom + 20) << "\" text-anchor=\"middle\">"
        << tick_label(x) << "</text>\n";
  }

  svg << "<text x=\"" << num(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << num(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << num(kTop + (kHeight - kTop - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << num(kTop + (kHeight - kTop - kBottom) / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  if (spec.zero_line) {
    svg << "<line class=\"zero-line\" x1=\"" << num(kLeft) << "\" y1=\"" << num(f.ty(0.0)) << "\" x2=\""
        << num(kWidth - kRight) << "\" y2=\"" << num(f.ty(0.0)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  }

  double legend_y = kTop + 10;
  for (const auto& s : spec.series) {
    svg << "<g class=\"series\" data-name=\"" << escape(s.name) << "\">\n";
    if (s.points.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        svg << (i ? " " : "") << num(f.tx(s.points[i].x)) << "," << num(f.ty(s.points[i].y));
      }
      svg << "\"/>\n";
    }
    for (const auto& p : s.points) {
      const double x = f.tx(p.x);
      svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(f.ty(p.low)) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(f.ty(p.high)) << "\" stroke=\"" << s.color << "\"/>\n";
      for (double cap : {p.low, p.high}) {
        svg << "<line x1=\"" << num(x - 4) << "\" y1=\"" << num(f.ty(cap)) << "\" x2=\"" << num(x + 4) << "\" y2=\""
            << num(f.ty(cap)) << "\" stroke=\"" << s.color << "\"/>\n";
      }
      marker(svg, s.marker, x, f.ty(p.y), s.color);
    }
    svg << "</g>\n";
    const double lx = kWidth - kRight + 15;
    marker(svg, s.marker, lx + 6, legend_y, s.color);
    svg << "<text class=\"legend\" x=\"" << num(lx + 18) << "\" y=\"" << num(legend_y + 4) << "\">" << escape(s.name)
        << "</text>\n";
    legend_y += 20;
  }
  svg << "</svg>\n";
  return svg.str();
}

PlotSpec accuracy_vs_size_plot(const std::vector<AggregatedPoint>& points) {
  PlotSpec spec;
  spec.title = "Coarse test accuracy";
  spec.x_label = "training set size";
  spec.y_label = "accuracy";
  spec.x_scale = AxisScale::Log2;
  PlotSeries fine{"fine-trained", "#2ca02c", "circle", {}};
  PlotSeries coarse{"coarse-trained", "#1f77b4", "square", {}};
  for (const auto& p : points) {
    if (p.replicates == 0) continue;
    const double fc = center_for(p.acc_fine_mean, p.acc_fine_median, p.fine_low, p.fine_high);
    const double cc = center_for(p.acc_coarse_mean, p.acc_coarse_median, p.coarse_low, p.coarse_high);
    fine.points.push_back({p.axis_value, fc, std::min(p.fine_low, fc), std::max(p.fine_high, fc)});
    coarse.points.push_back({p.axis_value, cc, std::min(p.coarse_low, cc), std::max(p.coarse_high, cc)});
  }
  spec.series = {fine, coarse};
  for (const auto& p : fine.points) {
    if (p.x <= 0.0) spec.x_scale = AxisScale::Linear;
  }
  return spec;
}

PlotSpec delta_vs_axis_plot(const std::vector<AggregatedPoint>& points) {
  PlotSpec spec;
  spec.title = "Fine minus coarse test accuracy";
  spec.x_label = "axis value";
  spec.y_label = "delta accuracy";
  spec.zero_line = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  PlotSeries delta{"delta", "#d62728", "circle", {}};
  for (const auto& p : points) {
    if (p.replicates == 0) continue;
    lo = std::min(lo, p.axis_value);
    hi = std::max(hi, p.axis_value);
    delta.points.push_back({p.axis_value, p.delta, std::min(p.spread_low, p.delta), std::max(p.spread_high, p.delta)});
  }
  if (!delta.points.empty() && lo > 0.0 && hi / lo > 8.0) spec.x_scale = AxisScale::Log2;
  spec.series = {delta};
  return spec;
}

}  // namespace granlab
