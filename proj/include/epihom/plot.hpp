#pragma once

#include <string>
#include <vector>

namespace epihom {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Self-contained SVG line plot (axes, ticks, legend). Output formatting is
/// fixed-precision, so identical inputs give byte-identical files.
std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series);

} // namespace epihom
