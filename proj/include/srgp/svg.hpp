#pragma once

#include <string>
#include <vector>

namespace srgp::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 720;
    int height = 440;
};

/// Static SVG line chart with axes, tick labels and a legend. Non-finite
/// points (and non-positive ones on a log axis) are skipped.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace srgp::svg
