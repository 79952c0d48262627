#pragma once

// Closed forms and brute-force references used as test oracles. Nothing here
// calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

// phi = a e^{-b t}: kappa solves kappa + phi * kappa = phi. In Laplace space
// kappa^ = phi^ / (1 + phi^) = a / (s + a + b).
inline double kappa_exponential(double a, double b, double t) { return a * std::exp(-(a + b) * t); }

// Psi^ = phi^ / (1 - phi^) = a / (s + b - a).
inline double psi_exponential(double a, double b, double t) { return a * std::exp(-(b - a) * t); }

// (a e^{-bt}) * (a e^{-bt}) = a^2 t e^{-bt}
inline double exp_self_convolution(double a, double b, double t) { return a * a * t * std::exp(-b * t); }

// E[N_t] for a univariate Hawkes with constant mu and phi = a e^{-bt}:
// mu t + mu a/(b-a) (t - (1 - e^{-(b-a)t})/(b-a)).
inline double expected_count_exponential(double mu, double a, double b, double t) {
    const double c = b - a;
    return mu * t + mu * a / c * (t - (1.0 - std::exp(-c * t)) / c);
}

// Impulsive-model impact for phi = a e^{-bt}, constant level f on [t0, t0+T].
// kappa = a e^{-gt}, g = a + b, so H(x) = 1 - w (a/g)(1 - e^{-gx}) with
// w = 1 + C b / a, and A(x) = int_0^x H = x - w (a/g)(x - (1 - e^{-gx})/g).
inline double impulsive_exponential_eta(double a, double b, double C, double f, double t0, double T, double t) {
    const double g = a + b;
    const double w = 1.0 + C * b / a;
    auto A = [&](double x) {
        if (x <= 0.0) return 0.0;
        return x - w * (a / g) * (x - (1.0 - std::exp(-g * x)) / g);
    };
    return f * (A(t - t0) - A(t - t0 - T));
}

// Composite Simpson rule on [lo, hi] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t n = 20000) {
    if (n % 2) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double s = f(lo) + f(hi);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
    return s * h / 3.0;
}

// Power-law mass alpha (offset + t)^b integrated on [0, inf) via the
// substitution u = offset + t and Simpson on a log-spaced variable.
inline double power_law_mass_numeric(double alpha, double b, double offset) {
    // int_offset^inf alpha u^b du = int_{log offset}^inf alpha e^{(b+1) x} dx
    const double lo = std::log(offset);
    const double hi = lo + 60.0 / (-b - 1.0);
    return simpson([&](double x) { return alpha * std::exp((b + 1.0) * x); }, lo, hi, 200000);
}

// Ordinary least squares slope and intercept.
struct Line {
    double slope{0.0};
    double intercept{0.0};
};

inline Line ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

// Type-7 sample quantile, as in R's default.
inline double quantile7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Kolmogorov-Smirnov statistic of a sample against Exp(rate).
inline double ks_exponential(std::vector<double> x, double rate) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return d;
}

} // namespace oracle
