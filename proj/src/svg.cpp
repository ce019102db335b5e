#include "deepcox/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace deepcox {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr std::array<const char*, 4> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Step-function vertices of `values` over `times`, starting at (0, start).
std::vector<std::pair<double, double>> steps(const std::vector<double>& times, const std::vector<double>& values,
                                             double start, double t_end) {
    std::vector<std::pair<double, double>> pts{{0.0, start}};
    double level = start;
    for (std::size_t k = 0; k < times.size(); ++k) {
        pts.emplace_back(times[k], level);
        level = values[k];
        pts.emplace_back(times[k], level);
    }
    pts.emplace_back(t_end, level);
    return pts;
}

} // namespace

std::string render_survival_svg(const std::vector<SurvivalSeries>& series, std::optional<double> p_value,
                                const std::string& title) {
    double t_max = 0.0;
    for (const auto& s : series) {
        if (!s.curve.event_times.empty()) t_max = std::max(t_max, s.curve.event_times.back());
    }
    if (!(t_max > 0.0)) t_max = 1.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double t) { return kLeft + plot_w * t / t_max; };
    auto py = [&](double s) { return kTop + plot_h * (1.0 - s); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", kWidth) + "\" height=\"" +
                      fmt("%.0f", kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt("%.1f", kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(title) + "</text>\n";

    // Axes and ticks.
    svg += "<g stroke=\"#333\" fill=\"none\"><path d=\"M" + fmt("%.1f", kLeft) + "," + fmt("%.1f", kTop) + " V" +
           fmt("%.1f", kTop + plot_h) + " H" + fmt("%.1f", kLeft + plot_w) + "\"/></g>\n";
    for (int k = 0; k <= 5; ++k) {
        const double s = k / 5.0;
        svg += "<text x=\"" + fmt("%.1f", kLeft - 6) + "\" y=\"" + fmt("%.1f", py(s) + 4) +
               "\" text-anchor=\"end\">" + fmt("%.1f", s) + "</text>\n";
        const double t = t_max * k / 5.0;
        svg += "<text x=\"" + fmt("%.1f", px(t)) + "\" y=\"" + fmt("%.1f", kTop + plot_h + 16) +
               "\" text-anchor=\"middle\">" + fmt("%.3g", t) + "</text>\n";
    }
    svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w / 2) + "\" y=\"" + fmt("%.1f", kHeight - 10) +
           "\" text-anchor=\"middle\">time</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt("%.1f", kTop + plot_h / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + fmt("%.1f", kTop + plot_h / 2) +
           ")\">survival probability</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& c = series[i].curve;
        const char* color = kColors[i % kColors.size()];
        const auto upper = steps(c.event_times, c.ci_upper, 1.0, t_max);
        const auto lower = steps(c.event_times, c.ci_lower, 1.0, t_max);
        std::string band = "M";
        for (const auto& [t, s] : upper) band += fmt("%.2f", px(t)) + "," + fmt("%.2f", py(s)) + " ";
        for (auto it = lower.rbegin(); it != lower.rend(); ++it) {
            band += "L" + fmt("%.2f", px(it->first)) + "," + fmt("%.2f", py(it->second)) + " ";
        }
        svg += "<path d=\"" + band + "Z\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        std::string line = "M";
        for (const auto& [t, s] : steps(c.event_times, c.survival, 1.0, t_max)) {
            line += fmt("%.2f", px(t)) + "," + fmt("%.2f", py(s)) + " ";
        }
        svg += "<path d=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        const double ly = kTop + 14 + 16.0 * static_cast<double>(i);
        svg += "<rect x=\"" + fmt("%.1f", kLeft + plot_w - 180) + "\" y=\"" + fmt("%.1f", ly - 9) +
               "\" width=\"12\" height=\"10\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w - 162) + "\" y=\"" + fmt("%.1f", ly) + "\">" +
               escape(series[i].label) + "</text>\n";
    }
    if (p_value) {
        const double ly = kTop + 14 + 16.0 * static_cast<double>(series.size());
        svg += "<text x=\"" + fmt("%.1f", kLeft + plot_w - 180) + "\" y=\"" + fmt("%.1f", ly) +
               "\">log-rank p = " + fmt("%.3g", *p_value) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace deepcox
