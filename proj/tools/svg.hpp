#pragma once

// Minimal self-contained SVG 1.1 line plots: one polyline per agent,
// decimated to a bounded number of points. No timestamps or external
// references, so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "text_util.hpp"

namespace optkcli {

struct SvgPlotOptions {
    int width = 900;
    int height = 560;
    int margin = 50;
    int max_points_per_series = 2000;
    std::string title;
};

// series[k] = one agent's (t, x) samples.
inline std::string svg_line_plot(const std::vector<std::vector<std::pair<double, double>>>& series,
                                 const SvgPlotOptions& opt = {}) {
    double tmin = 1e300, tmax = -1e300, xmin = 1e300, xmax = -1e300;
    for (const auto& s : series) {
        for (const auto& [t, x] : s) {
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    }
    if (tmax <= tmin) tmax = tmin + 1.0;
    if (xmax <= xmin) xmax = xmin + 1.0;

    const double W = opt.width, H = opt.height, m = opt.margin;
    auto px = [&](double t) { return m + (t - tmin) / (tmax - tmin) * (W - 2 * m); };
    auto py = [&](double x) { return H - m - (x - xmin) / (xmax - xmin) * (H - 2 * m); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << opt.width
       << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << " " << opt.height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
              "font-family=\"sans-serif\">"
           << opt.title << "</text>\n";
    // Axes.
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\""
       << H - m << "\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m
       << "\"/>\n</g>\n";
    os << "<g font-size=\"12\" font-family=\"sans-serif\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = tmin + (tmax - tmin) * k / 4.0;
        const double x = xmin + (xmax - xmin) * k / 4.0;
        os << "<text x=\"" << px(t) << "\" y=\"" << H - m + 18
           << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
        os << "<text x=\"" << m - 8 << "\" y=\"" << py(x) + 4
           << "\" text-anchor=\"end\">" << fmt(x) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\">t</text>\n";
    os << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << H / 2 << ")\">x</text>\n</g>\n";

    const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    os << "<g fill=\"none\" stroke-width=\"0.6\" stroke-opacity=\"0.55\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        if (s.empty()) continue;
        const std::size_t stride =
            std::max<std::size_t>(1, s.size() / static_cast<std::size_t>(opt.max_points_per_series));
        os << "<polyline stroke=\"" << palette[k % 10] << "\" points=\"";
        for (std::size_t p = 0; p < s.size(); p += stride)
            os << fmt(px(s[p].first)) << "," << fmt(py(s[p].second)) << " ";
        const auto& last = s.back();
        os << fmt(px(last.first)) << "," << fmt(py(last.second));
        os << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

}  // namespace optkcli
