#include "tcfg/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tcfg/error.hpp"
#include "tcfg/io.hpp"

namespace tcfg::plot {
namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0;
      hi = 1;
    } else if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  Range xr, yr;
  for (const Series& s : spec.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (spec.log_y && y <= 0)) {
        throw Error(ErrorKind::kInvalidInput, "plot series '" + s.label + "' has an invalid coordinate");
      }
      xr.add(x);
      yr.add(spec.log_y ? std::log10(y) : y);
    }
  }
  xr.finish();
  yr.finish();

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) {
    const double v = spec.log_y ? std::log10(y) : y;
    return kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph;
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(spec.title) + "</text>\n";
  }

  // Axes and ticks.
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" +
         num(kTop + ph) + "\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + ph) + "\"/>\n";
  out += "</g>\n<g font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double sx = kLeft + pw * i / 4.0;
    const double sy = kTop + ph - ph * i / 4.0;
    char xb[32], yb[32];
    std::snprintf(xb, sizeof xb, "%.3g", fx);
    std::snprintf(yb, sizeof yb, "%.3g", spec.log_y ? std::pow(10.0, fy) : fy);
    out += "<text x=\"" + num(sx) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + xb + "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy + 4) + "\" text-anchor=\"end\">" + yb + "</text>\n";
  }
  out += "</g>\n";
  if (!spec.x_label.empty()) {
    out += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 16) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + escape(spec.x_label) + "</text>\n";
  }
  if (!spec.y_label.empty()) {
    out += "<text x=\"18\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
           num(kTop + ph / 2) + ")\">" + escape(spec.y_label) + "</text>\n";
  }

  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const Series& s = spec.series[i];
    const std::string color = s.color.empty() ? kPalette[i % kPalette.size()] : s.color;
    if (s.line) {
      out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.points.size(); ++k) {
        if (k) out += ' ';
        out += num(px(s.points[k].first)) + "," + num(py(s.points[k].second));
      }
      out += "\"/>\n";
    } else {
      out += "<g fill=\"" + color + "\">\n";
      for (const auto& [x, y] : s.points) {
        out += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"2\"/>\n";
      }
      out += "</g>\n";
    }
  }

  // Legend: one swatch per labeled series.
  double ly = kTop + 10;
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const Series& s = spec.series[i];
    if (s.label.empty()) continue;
    const std::string color = s.color.empty() ? kPalette[i % kPalette.size()] : s.color;
    out += "<rect x=\"" + num(kWidth - kRight + 16) + "\" y=\"" + num(ly - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(kWidth - kRight + 32) + "\" y=\"" + num(ly + 1) + "\" font-size=\"11\">" +
           escape(s.label) + "</text>\n";
    ly += 18;
  }
  out += "</svg>\n";
  return out;
}

void emit_plot(const PlotSpec& spec) { io::write_text_file(spec.output, render_svg(spec)); }

}  // namespace tcfg::plot
