#include "lae/plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "lae/error.hpp"

namespace lae::harness {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 50;

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

// Fixed two-decimal coordinates keep the files small and stable.
std::string px(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

std::string tick(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const PlotLabels& labels) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto X = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto Y = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(labels.title)
       << "</text>\n";
    os << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = x0 + (x1 - x0) * k / 4.0;
        const double fy = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << px(X(fx)) << "\" y=\"" << px(kTop + ph + 16) << "\" text-anchor=\"middle\">" << tick(fx)
           << "</text>\n";
        os << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(Y(fy) + 4) << "\" text-anchor=\"end\">" << tick(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kHeight - 10) << "\" text-anchor=\"middle\">"
       << esc(labels.x) << "</text>\n";
    os << "<text transform=\"translate(16 " << px(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << esc(labels.y) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = kPalette[k % kPalette.size()];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.scatter) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                os << "<circle cx=\"" << px(X(s.x[i])) << "\" cy=\"" << px(Y(s.y[i])) << "\" r=\"3\" fill=\"" << colour
                   << "\"/>\n";
            }
        } else if (n) {
            os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
            bool first = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                os << (first ? "" : " ") << px(X(s.x[i])) << ',' << px(Y(s.y[i]));
                first = false;
            }
            os << "\"/>\n";
        }
        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        os << "<rect x=\"" << px(kWidth - kRight + 10) << "\" y=\"" << px(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
           << colour << "\"/>\n";
        os << "<text x=\"" << px(kWidth - kRight + 26) << "\" y=\"" << px(ly) << "\">" << esc(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::filesystem::path> emit_plot_data(const std::vector<Series>& series, const std::filesystem::path& stem,
                                                  const PlotLabels& labels, bool charts) {
    std::vector<std::filesystem::path> written;
    std::string csv = "series,x,y\n";
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw Error(ErrorKind::InvalidArgument, "series '" + s.name + "' has ragged x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            csv += s.name + "," + format_number(s.x[i]) + "," + format_number(s.y[i]) + "\n";
        }
    }
    auto csv_path = stem;
    csv_path += ".csv";
    write_file(csv_path, csv);
    written.push_back(csv_path);
    if (!charts || series.empty()) return written;

    for (const auto& s : series) {
        auto p = stem;
        p += "_" + s.name + ".svg";
        PlotLabels l = labels;
        l.title = labels.title.empty() ? s.name : labels.title + " (" + s.name + ")";
        write_file(p, render_svg({s}, l));
        written.push_back(p);
    }
    if (series.size() > 1) {
        auto p = stem;
        p += ".svg";
        write_file(p, render_svg(series, labels));
        written.push_back(p);
    }
    return written;
}

}  // namespace lae::harness
