#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pimaw/cli.hpp"

namespace pimaw::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double nice_step(double span, int target) {
    const double raw = span / std::max(target, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_svg(const std::vector<ChartSeries>& series, const ChartOptions& opts) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    const double W = opts.width, H = opts.height;
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;

    auto ty = [&](double y) { return opts.log_y ? std::log10(y) : y; };
    auto usable = [&](double y) { return std::isfinite(y) && (!opts.log_y || y > 0.0); };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (opts.log_y) {
        y0 = std::floor(y0);
        y1 = std::max(std::ceil(y1), y0 + 1);
    } else if (y1 - y0 < 1e-300) {
        y0 -= 0.5, y1 += 0.5;
    }
    if (x1 - x0 < 1e-300) x1 = x0 + 1;

    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opts.width) + "\" height=\"" +
         std::to_string(opts.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + fmt(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(opts.title) +
         "</text>\n";

    // Grid and ticks
    std::string grid;
    if (opts.log_y) {
        const int step = std::max(1, static_cast<int>(std::ceil((y1 - y0) / 8.0)));
        for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); e += step) {
            const double y = py(e);
            grid += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" + fmt(y) +
                    "\" stroke=\"#ddd\"/>\n";
            grid += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">1e" +
                    std::to_string(e) + "</text>\n";
        }
    } else {
        const double st = nice_step(y1 - y0, 6);
        for (double v = std::ceil(y0 / st) * st; v <= y1 + 1e-12 * st; v += st) {
            const double y = py(v);
            grid += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" + fmt(y) +
                    "\" stroke=\"#ddd\"/>\n";
            grid += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + tick_label(v) +
                    "</text>\n";
        }
    }
    {
        const double st = nice_step(x1 - x0, 8);
        for (double v = std::ceil(x0 / st) * st; v <= x1 + 1e-12 * st; v += st) {
            const double x = px(v);
            grid += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(top + ph) +
                    "\" stroke=\"#eee\"/>\n";
            grid += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(top + ph + 16) + "\" text-anchor=\"middle\">" +
                    tick_label(v) + "</text>\n";
        }
    }
    o += grid;
    o += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(H - 10) + "\" text-anchor=\"middle\">" +
         escape(opts.x_label) + "</text>\n";
    o += "<text transform=\"translate(16," + fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(opts.y_label) + "</text>\n";

    // Series; a non-plottable sample breaks the polyline.
    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const std::string color = palette[k % (sizeof palette / sizeof *palette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                o += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
            pts.clear();
        };
        for (size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !usable(s.y[i])) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += fmt(px(s.x[i])) + "," + fmt(py(std::clamp(ty(s.y[i]), y0, y1)));
        }
        flush();
        const double ly = top + 14 + 16.0 * static_cast<double>(k);
        o += "<line x1=\"" + fmt(left + pw - 150) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(left + pw - 125) +
             "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        o += "<text x=\"" + fmt(left + pw - 120) + "\" y=\"" + fmt(ly) + "\">" + escape(s.label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

}  // namespace pimaw::cli
