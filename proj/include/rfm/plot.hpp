#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rfm {

/// A line with an optional symmetric band (mean +/- stddev).
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;  // empty: no band
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<PlotSeries> series;
    int width = 640;
    int height = 400;
};

/// Powers of ten covering [lo, hi]; lo and hi must be positive.
std::vector<double> decade_ticks(double lo, double hi);

/// Static SVG; identical input gives identical bytes. Throws
/// std::invalid_argument on an empty or malformed series list.
std::string render_svg(const PlotSpec& spec);
void write_svg(const std::filesystem::path& path, const PlotSpec& spec);

}  // namespace rfm
