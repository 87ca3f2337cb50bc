#pragma once

// Minimal SVG 1.1 line charts for convergence plots.

#include <string>
#include <utility>
#include <vector>

namespace eqopt {

struct PlotSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

struct PlotOptions {
    std::string title;
    std::string x_label = "iteration k";
    std::string y_label = "log10 rel_err";
    int width = 800;
    int height = 500;
    std::size_t max_points_per_series = 4000;
};

/// One <polyline> per series, in order. Non-finite points are dropped.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt = {});

std::string xml_escape(const std::string& s);

} // namespace eqopt
