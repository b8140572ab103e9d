#include "epihom/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace epihom {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr double kLeft = 72.0, kRight = 24.0, kTop = 40.0, kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

Range data_range(const std::vector<PlotSeries>& series, bool use_x) {
    bool first = true;
    Range r;
    for (const auto& s : series) {
        for (double v : (use_x ? s.x : s.y)) {
            if (!std::isfinite(v)) continue;
            if (first) {
                r.lo = r.hi = v;
                first = false;
            } else {
                r.expand(v);
            }
        }
    }
    if (first) return {0.0, 1.0};
    if (r.hi == r.lo) {
        double pad = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
        return {r.lo - pad, r.hi + pad};
    }
    double pad = 0.05 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
}

} // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series) {
    Range rx = data_range(series, true);
    Range ry = data_range(series, false);
    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + plot_w * (x - rx.lo) / (rx.hi - rx.lo); };
    auto py = [&](double y) { return kTop + plot_h * (1.0 - (y - ry.lo) / (ry.hi - ry.lo)); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
           "\" height=\"" + std::to_string(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kWidth / 2.0) +
           "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">" +
           title + "</text>\n";

    // Frame and ticks.
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(plot_w) +
           "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = rx.lo + (rx.hi - rx.lo) * k / 4.0;
        double yv = ry.lo + (ry.hi - ry.lo) * k / 4.0;
        svg += "<line x1=\"" + fmt(px(xv)) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" +
               fmt(px(xv)) + "\" y2=\"" + fmt(kTop + plot_h + 5) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(kTop + plot_h + 20) +
               "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" +
               fmt(xv) + "</text>\n";
        svg += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(py(yv)) + "\" x2=\"" +
               fmt(kLeft) + "\" y2=\"" + fmt(py(yv)) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(yv) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" +
               fmt(yv) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 12.0) +
           "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" +
           x_label + "</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(kTop + plot_h / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 " +
           fmt(kTop + plot_h / 2) + ")\">" + y_label + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const PlotSeries& s = series[si];
        const char* color = kPalette[si % 4];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            svg += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) +
                   "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        }
        if (!s.label.empty()) {
            double ly = kTop + 14.0 + 16.0 * si;
            svg += "<line x1=\"" + fmt(kLeft + 10) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
                   fmt(kLeft + 34) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
                   "\" stroke-width=\"1.5\"/>\n";
            svg += "<text x=\"" + fmt(kLeft + 40) + "\" y=\"" + fmt(ly) +
                   "\" font-size=\"11\" font-family=\"sans-serif\">" + s.label + "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace epihom
