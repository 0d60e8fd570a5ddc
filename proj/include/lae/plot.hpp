#pragma once

// CSV and SVG emission for experiment series. Output depends only on the
// numbers passed in, so identical inputs give identical bytes.

#include <filesystem>
#include <string>
#include <vector>

namespace lae::harness {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;
};

struct PlotLabels {
    std::string title;
    std::string x = "x";
    std::string y = "y";
};

/// Writes `<stem>.csv` (series,x,y) and, when `charts` is set, one
/// `<stem>_<series>.svg` per series plus `<stem>.svg` overlaying all of them.
/// Returns the files written.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<Series>& series, const std::filesystem::path& stem,
                                                  const PlotLabels& labels = {}, bool charts = true);

/// Self-contained SVG line/scatter chart.
std::string render_svg(const std::vector<Series>& series, const PlotLabels& labels);

/// Shortest text that parses back to the same double; "nan"/"inf" otherwise.
std::string format_number(double v);

/// Opens `path` for writing, throwing Io when it cannot.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace lae::harness
