#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "strategiciv/errors.hpp"

namespace strategiciv {

/// One plotted series: a polyline, markers, or both, with an optional
/// shaded band between band_lo and band_hi.
struct Series {
    std::string label;
    std::string color = "#1f77b4";
    bool line = true;
    bool markers = false;
    bool dashed = false;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> band_lo;  // empty or one per point
    std::vector<double> band_hi;
};

struct Figure {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string caption;  // rendered under the axes, e.g. the seed list
    std::vector<Series> series;
    bool log_x = false;
    bool log_y = false;
};

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline double to_axis(double v, bool log_scale) {
    if (!log_scale) return v;
    if (!(v > 0.0)) throw ValidationError("log-scale axis requires positive values");
    return std::log10(v);
}

}  // namespace detail

/// Render a figure as a standalone SVG 1.1 document.  The output is a
/// pure function of the figure data, so rendering the same table twice
/// yields identical bytes.
inline std::string render_svg(const Figure& fig) {
    constexpr double width = 640, height = 480;
    constexpr double ml = 72, mr = 16, mt = 36, mb = 64;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : fig.series) {
        if (s.x.size() != s.y.size())
            throw ValidationError("series '" + s.label + "' has mismatched x/y lengths");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double xv = detail::to_axis(s.x[i], fig.log_x);
            double yv = detail::to_axis(s.y[i], fig.log_y);
            x_min = std::min(x_min, xv), x_max = std::max(x_max, xv);
            y_min = std::min(y_min, yv), y_max = std::max(y_max, yv);
        }
        for (std::size_t i = 0; i < s.band_lo.size(); ++i) {
            y_min = std::min(y_min, detail::to_axis(s.band_lo[i], fig.log_y));
            y_max = std::max(y_max, detail::to_axis(s.band_hi[i], fig.log_y));
        }
    }
    if (!(x_min <= x_max)) x_min = 0, x_max = 1;
    if (!(y_min <= y_max)) y_min = 0, y_max = 1;
    if (x_min == x_max) x_min -= 0.5, x_max += 0.5;
    if (y_min == y_max) y_min -= 0.5, y_max += 0.5;

    auto px = [&](double v) { return ml + (detail::to_axis(v, fig.log_x) - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double v) { return mt + plot_h - (detail::to_axis(v, fig.log_y) - y_min) / (y_max - y_min) * plot_h; };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" + fig.title + "</text>\n";

    // Axes and ticks.
    out += "<rect x=\"" + detail::fixed2(ml) + "\" y=\"" + detail::fixed2(mt) + "\" width=\"" +
           detail::fixed2(plot_w) + "\" height=\"" + detail::fixed2(plot_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    constexpr int ticks = 5;
    for (int i = 0; i < ticks; ++i) {
        double fx = x_min + (x_max - x_min) * i / (ticks - 1);
        double fy = y_min + (y_max - y_min) * i / (ticks - 1);
        double tx = ml + plot_w * i / (ticks - 1);
        double ty = mt + plot_h - plot_h * i / (ticks - 1);
        double x_value = fig.log_x ? std::pow(10.0, fx) : fx;
        double y_value = fig.log_y ? std::pow(10.0, fy) : fy;
        out += "<line x1=\"" + detail::fixed2(tx) + "\" y1=\"" + detail::fixed2(mt + plot_h) +
               "\" x2=\"" + detail::fixed2(tx) + "\" y2=\"" + detail::fixed2(mt + plot_h + 5) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fixed2(tx) + "\" y=\"" + detail::fixed2(mt + plot_h + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::tick_label(x_value) + "</text>\n";
        out += "<line x1=\"" + detail::fixed2(ml - 5) + "\" y1=\"" + detail::fixed2(ty) +
               "\" x2=\"" + detail::fixed2(ml) + "\" y2=\"" + detail::fixed2(ty) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fixed2(ml - 8) + "\" y=\"" + detail::fixed2(ty + 3) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::tick_label(y_value) + "</text>\n";
    }
    out += "<text x=\"" + detail::fixed2(ml + plot_w / 2) + "\" y=\"" + detail::fixed2(height - 28) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + fig.x_label +
           "</text>\n";
    out += "<text x=\"16\" y=\"" + detail::fixed2(mt + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
           detail::fixed2(mt + plot_h / 2) + ")\">" + fig.y_label + "</text>\n";

    // Bands first so lines draw on top.
    for (const auto& s : fig.series) {
        if (s.band_lo.empty()) continue;
        if (s.band_lo.size() != s.x.size() || s.band_hi.size() != s.x.size())
            throw ValidationError("series '" + s.label + "' has mismatched band lengths");
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            points += detail::fixed2(px(s.x[i])) + "," + detail::fixed2(py(s.band_hi[i])) + " ";
        for (std::size_t i = s.x.size(); i-- > 0;)
            points += detail::fixed2(px(s.x[i])) + "," + detail::fixed2(py(s.band_lo[i])) + " ";
        if (!points.empty()) points.pop_back();
        out += "<polygon points=\"" + points + "\" fill=\"" + s.color +
               "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    for (const auto& s : fig.series) {
        if (s.line && s.x.size() > 1) {
            std::string points;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                points += detail::fixed2(px(s.x[i])) + "," + detail::fixed2(py(s.y[i])) + " ";
            points.pop_back();
            out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + s.color +
                   "\" stroke-width=\"1.5\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") +
                   "/>\n";
        }
        if (s.markers || s.x.size() == 1) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out += "<circle cx=\"" + detail::fixed2(px(s.x[i])) + "\" cy=\"" +
                       detail::fixed2(py(s.y[i])) + "\" r=\"2.5\" fill=\"" + s.color + "\"/>\n";
        }
    }

    // Legend.
    double ly = mt + 14;
    for (const auto& s : fig.series) {
        if (s.label.empty()) continue;
        out += "<line x1=\"" + detail::fixed2(ml + 10) + "\" y1=\"" + detail::fixed2(ly - 4) +
               "\" x2=\"" + detail::fixed2(ml + 34) + "\" y2=\"" + detail::fixed2(ly - 4) +
               "\" stroke=\"" + s.color + "\" stroke-width=\"2\"" +
               (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
        out += "<text x=\"" + detail::fixed2(ml + 40) + "\" y=\"" + detail::fixed2(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
        ly += 16;
    }

    if (!fig.caption.empty())
        out += "<text x=\"320\" y=\"" + detail::fixed2(height - 10) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" "
               "fill=\"#555555\">" + fig.caption + "</text>\n";
    out += "</svg>\n";
    return out;
}

inline void write_svg(const Figure& fig, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << render_svg(fig);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace strategiciv
