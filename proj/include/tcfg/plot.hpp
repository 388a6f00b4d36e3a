#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tcfg::plot {

enum class Kind { kScatter, kMultiLine, kTrajectoryOverlay };

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = false;  // polyline instead of markers
  std::string color;  // empty: palette by series index
};

struct PlotSpec {
  Kind kind = Kind::kScatter;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
  std::filesystem::path output;
};

// SVG document. Markers are <circle>, line series are <polyline>, legend
// swatches are <rect>. Throws kInvalidInput on non-finite coordinates (or
// non-positive y with log_y).
std::string render_svg(const PlotSpec& spec);

// Writes render_svg(spec) to spec.output; throws kIo when unwritable.
void emit_plot(const PlotSpec& spec);

}  // namespace tcfg::plot
