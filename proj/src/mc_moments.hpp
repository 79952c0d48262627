#pragma once

#include "himpact/hawkes_sim.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace himpact::detail {

struct Moments {
    std::vector<double> sum, sumsq;
    explicit Moments(std::size_t n = 0) : sum(n, 0.0), sumsq(n, 0.0) {}
};

inline McCurve finish(std::span<const double> t_grid, const Moments& m, std::size_t n_paths) {
    McCurve c;
    c.t.assign(t_grid.begin(), t_grid.end());
    c.n_paths = n_paths;
    const double n = static_cast<double>(n_paths);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double mean = m.sum[i] / n;
        const double var = n_paths > 1 ? std::max(0.0, (m.sumsq[i] - n * mean * mean) / (n - 1.0)) : 0.0;
        c.mean.push_back(mean);
        c.stderr_.push_back(std::sqrt(var / n));
    }
    return c;
}

inline double grid_horizon(std::span<const double> t_grid, double requested) {
    double t_max = 0.0;
    for (double t : t_grid) t_max = std::max(t_max, t);
    return requested > 0.0 ? std::max(requested, t_max) : std::max(t_max, 1e-9);
}


} // namespace himpact::detail
