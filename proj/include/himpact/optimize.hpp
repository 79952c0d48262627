#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

namespace himpact {

struct LineMin {
    double x{0.0};
    double fx{0.0};
    std::size_t evaluations{0};
};

/// Golden-section search for a minimum of f on [lo, hi]. Stops when the
/// bracket is narrower than tol (absolute) or after max_iter shrinks.
inline LineMin golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10,
                              std::size_t max_iter = 200) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    LineMin out;
    out.evaluations = 2;
    for (std::size_t it = 0; it < max_iter && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++out.evaluations;
    }
    if (fc <= fd) {
        out.x = c;
        out.fx = fc;
    } else {
        out.x = d;
        out.fx = fd;
    }
    return out;
}

/// Evaluate f on n + 1 evenly spaced points of [lo, hi], then refine the best
/// one by golden section inside its neighbouring cells. Endpoints are checked
/// too, so a boundary optimum is returned exactly.
inline LineMin scan_then_golden(const std::function<double(double)>& f, double lo, double hi, std::size_t n = 40,
                                double tol = 1e-10) {
    std::size_t best = 0;
    double best_f = INFINITY;
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = i == n ? hi : lo + h * static_cast<double>(i);
        const double v = f(x);
        if (v < best_f) {
            best_f = v;
            best = i;
        }
    }
    const double a = best == 0 ? lo : lo + h * static_cast<double>(best - 1);
    const double b = best == n ? hi : lo + h * static_cast<double>(best + 1);
    auto r = golden_section(f, a, b, tol);
    r.evaluations += n + 1;
    const double xb = best == n ? hi : lo + h * static_cast<double>(best);
    if (best_f < r.fx) {
        r.x = xb;
        r.fx = best_f;
    }
    return r;
}

} // namespace himpact
