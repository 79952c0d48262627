#include "himpact/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace himpact::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo{std::numeric_limits<double>::infinity()};
    double hi{-std::numeric_limits<double>::infinity()};

    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo <= 0.0) {
            const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

/// Round step (1, 2 or 5 times a power of ten) giving about n ticks.
std::vector<double> ticks(const Range& r, int n) {
    const double raw = (r.hi - r.lo) / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9 * step; v += step) {
        out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return out;
}

} // namespace

std::string render(const Chart& c) {
    const double left = 70, right = 20 + (c.series.size() > 1 ? 120 : 0), top = 36, bottom = 50;
    const double pw = c.width - left - right, ph = c.height - top - bottom;

    Range xr, yr;
    for (const auto& s : c.series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                xr.add(s.x[i]);
                yr.add(s.y[i]);
            }
        }
    }
    xr.settle();
    yr.settle();
    const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(c.width) + "\" height=\"" +
         std::to_string(c.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!c.title.empty()) {
        o += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
             escape(c.title) + "</text>\n";
    }

    o += "<g stroke=\"#ccc\" stroke-width=\"0.5\">\n";
    const auto xt = ticks(xr, 6), yt = ticks(yr, 5);
    for (double v : xt) o += "<line x1=\"" + fmt(px(v)) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(px(v)) + "\" y2=\"" + fmt(top + ph) + "\"/>\n";
    for (double v : yt) o += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(py(v)) + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" + fmt(py(v)) + "\"/>\n";
    o += "</g>\n";
    o += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : xt) {
        o += "<text x=\"" + fmt(px(v)) + "\" y=\"" + fmt(top + ph + 15) + "\" text-anchor=\"middle\">" + fmt(v, "%g") + "</text>\n";
    }
    for (double v : yt) {
        o += "<text x=\"" + fmt(left - 5) + "\" y=\"" + fmt(py(v) + 4) + "\" text-anchor=\"end\">" + fmt(v, "%g") + "</text>\n";
    }
    if (yr.lo < 0.0 && yr.hi > 0.0) {
        o += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(left + pw) + "\" y2=\"" + fmt(py(0)) +
             "\" stroke=\"#888\"/>\n";
    }
    if (!c.x_label.empty()) {
        o += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(c.height - 12.0) + "\" text-anchor=\"middle\">" +
             escape(c.x_label) + "</text>\n";
    }
    if (!c.y_label.empty()) {
        o += "<text x=\"16\" y=\"" + fmt(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
             fmt(top + ph / 2) + ")\">" + escape(c.y_label) + "</text>\n";
    }

    for (std::size_t k = 0; k < c.series.size(); ++k) {
        const auto& s = c.series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::string pts;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!pts.empty()) pts += ' ';
            pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
        }
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        if (c.series.size() > 1) {
            const double ly = top + 10 + 16.0 * static_cast<double>(k);
            const double lx = left + pw + 10;
            o += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(lx + 18) + "\" y2=\"" + fmt(ly) +
                 "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
            o += "<text x=\"" + fmt(lx + 22) + "\" y=\"" + fmt(ly + 4) + "\">" + escape(s.label) + "</text>\n";
        }
    }
    o += "</svg>\n";
    return o;
}

} // namespace himpact::svg
