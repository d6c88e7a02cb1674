#pragma once

// Self-contained SVG emission for the handful of plots the harness produces.
// CSV is the canonical output; these are a convenience, so the drawing code
// stays deliberately simple: fixed canvas, linear axes, small palette.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "metricrl/textio.hpp"

namespace metricrl {

namespace svgdetail {

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#4878cf", "#ee854a", "#6acc65", "#d65f5f",
                                   "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
    return colors[i % 8];
}

inline std::string num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

inline std::string text(double x, double y, const std::string& s, int size = 12,
                        const std::string& anchor = "start") {
    return "<text x='" + num(x) + "' y='" + num(y) + "' font-size='" + std::to_string(size) +
           "' font-family='sans-serif' text-anchor='" + anchor + "'>" + s + "</text>\n";
}

}  // namespace svgdetail

struct SvgSeries {
    std::string name;
    std::vector<double> values;           // one per category / x position
    std::vector<bool> censored;           // optional, same length, line charts only
};

// Grouped bars: one group per category, one bar per series.
inline std::string svg_bar_chart(const std::string& title,
                                 const std::vector<std::string>& categories,
                                 const std::vector<SvgSeries>& series, double y_max = 1.0) {
    using namespace svgdetail;
    const double w = 640, h = 400, left = 60, right = 20, top = 40, bottom = 50;
    const double plot_w = w - left - right, plot_h = h - top - bottom;
    std::string out = "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='400'>\n";
    out += text(w / 2, 20, title, 14, "middle");
    for (int tick = 0; tick <= 4; ++tick) {
        const double frac = tick / 4.0;
        const double y = top + plot_h * (1.0 - frac);
        out += "<line x1='" + num(left) + "' y1='" + num(y) + "' x2='" + num(w - right) + "' y2='" +
               num(y) + "' stroke='#dddddd'/>\n";
        out += text(left - 8, y + 4, num(y_max * frac), 11, "end");
    }
    const double group_w = plot_w / categories.size();
    const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, series.size());
    for (std::size_t c = 0; c < categories.size(); ++c) {
        out += text(left + group_w * (c + 0.5), h - bottom + 18, categories[c], 12, "middle");
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].values[c];
            const double bar_h = plot_h * std::clamp(v / y_max, 0.0, 1.0);
            const double x = left + group_w * c + group_w * 0.1 + bar_w * s;
            out += "<rect x='" + num(x) + "' y='" + num(top + plot_h - bar_h) + "' width='" +
                   num(bar_w - 2) + "' height='" + num(bar_h) + "' fill='" +
                   palette(s) + "'/>\n";
        }
    }
    out += "<line x1='" + num(left) + "' y1='" + num(top + plot_h) + "' x2='" + num(w - right) +
           "' y2='" + num(top + plot_h) + "' stroke='#000000'/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + 14.0 * s;
        out += "<rect x='" + num(w - right - 150) + "' y='" + num(y) + "' width='10' height='10' fill='" +
               palette(s) + "'/>\n";
        out += text(w - right - 135, y + 9, series[s].name, 11);
    }
    out += "</svg>\n";
    return out;
}

// Line chart over shared numeric x positions; censored points drawn hollow.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::vector<double>& xs,
                                  const std::vector<SvgSeries>& series) {
    using namespace svgdetail;
    const double w = 640, h = 400, left = 80, right = 20, top = 40, bottom = 50;
    const double plot_w = w - left - right, plot_h = h - top - bottom;
    double x_min = xs.front(), x_max = xs.back(), y_max = 1.0;
    for (const auto& s : series)
        for (double v : s.values) y_max = std::max(y_max, v);
    y_max *= 1.05;
    auto px = [&](double x) {
        return x_max == x_min ? left : left + plot_w * (x - x_min) / (x_max - x_min);
    };
    auto py = [&](double y) { return top + plot_h * (1.0 - y / y_max); };
    std::string out = "<svg xmlns='http://www.w3.org/2000/svg' width='640' height='400'>\n";
    out += text(w / 2, 20, title, 14, "middle");
    out += text(w / 2, h - 12, x_label, 12, "middle");
    for (int tick = 0; tick <= 4; ++tick) {
        const double yv = y_max * tick / 4.0;
        out += "<line x1='" + num(left) + "' y1='" + num(py(yv)) + "' x2='" + num(w - right) +
               "' y2='" + num(py(yv)) + "' stroke='#dddddd'/>\n";
        out += text(left - 8, py(yv) + 4, num(yv), 11, "end");
    }
    for (double x : xs) {
        out += "<line x1='" + num(px(x)) + "' y1='" + num(top + plot_h) + "' x2='" + num(px(x)) +
               "' y2='" + num(top + plot_h + 5) + "' stroke='#000000'/>\n";
        out += text(px(x), top + plot_h + 18, num(x), 11, "middle");
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string path;
        for (std::size_t i = 0; i < xs.size(); ++i)
            path += (i == 0 ? "M" : "L") + num(px(xs[i])) + " " + num(py(series[s].values[i])) + " ";
        out += "<path d='" + path + "' fill='none' stroke='" + palette(s) + "' stroke-width='2'/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const bool censored = i < series[s].censored.size() && series[s].censored[i];
            out += "<circle cx='" + num(px(xs[i])) + "' cy='" + num(py(series[s].values[i])) +
                   "' r='4' fill='" + (censored ? std::string("none") : std::string(palette(s))) +
                   "' stroke='" + palette(s) + "'/>\n";
        }
        out += "<rect x='" + num(left + 10) + "' y='" + num(top + 14.0 * s) +
               "' width='10' height='10' fill='" + palette(s) + "'/>\n";
        out += text(left + 25, top + 14.0 * s + 9, series[s].name, 11);
    }
    out += "</svg>\n";
    return out;
}

// Colored cell map for small 2D grids (multi-goal chosen-goal maps).
inline std::string svg_grid_map(const std::string& title, int cells,
                                const std::vector<int>& color_index,
                                const std::vector<std::string>& legend) {
    using namespace svgdetail;
    const double w = 480, h = 480, top = 40, cell = (h - top - 60) / cells;
    std::string out = "<svg xmlns='http://www.w3.org/2000/svg' width='480' height='480'>\n";
    out += text(w / 2, 20, title, 14, "middle");
    for (int x = 0; x < cells; ++x) {
        for (int y = 0; y < cells; ++y) {
            const int idx = color_index[static_cast<std::size_t>(x) * cells + y];
            const std::string fill = idx < 0 ? "#eeeeee" : palette(static_cast<std::size_t>(idx));
            out += "<rect x='" + num(40 + x * cell) + "' y='" + num(top + (cells - 1 - y) * cell) +
                   "' width='" + num(cell - 1) + "' height='" + num(cell - 1) + "' fill='" + fill +
                   "'/>\n";
        }
    }
    for (std::size_t i = 0; i < legend.size(); ++i) {
        out += "<rect x='40' y='" + num(h - 40 + 14.0 * i - 10) + "' width='10' height='10' fill='" +
               palette(i) + "'/>\n";
        out += text(55, h - 40 + 14.0 * i, legend[i], 11);
    }
    out += "</svg>\n";
    return out;
}

}  // namespace metricrl
