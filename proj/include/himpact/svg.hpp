#pragma once

// Static line charts: axes, tick labels and one polyline per series.

#include <string>
#include <vector>

namespace himpact::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width{720};
    int height{440};
};

/// Non-finite points are skipped. Empty charts still get axes.
[[nodiscard]] std::string render(const Chart& chart);

} // namespace himpact::svg
