#include "himpact/kernels.hpp"

#include "himpact/error.hpp"

#include <algorithm>
#include <cmath>

namespace himpact {

namespace {

void check_same_grid(const SampledFunction& f, const SampledFunction& g) {
    require(std::abs(f.dt() - g.dt()) <= 1e-12 * std::max(f.dt(), g.dt()),
            "convolve: operands must share the same dt");
}

bool is_zero(const SampledFunction& f) {
    return f.tail_mass() == 0.0 && std::all_of(f.values().begin(), f.values().end(), [](double v) { return v == 0.0; });
}

// sum_{j=lo}^{hi-1} a[j] * rev[base + j], vectorised.
inline double dot_reversed(const double* a, const double* rev, std::size_t base, std::size_t lo, std::size_t hi) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = lo; j < hi; ++j) acc += a[j] * rev[base + j];
    return acc;
}

} // namespace

SampledFunction convolve(const SampledFunction& f, const SampledFunction& g) {
    check_same_grid(f, g);
    const std::size_t n = std::min(f.size(), g.size());
    const double dt = f.dt();
    std::vector<double> out(n, 0.0);
    if (n == 0) return SampledFunction(dt, std::move(out));

    // f reversed so that f[k - j] = rev[(n - 1 - k) + j] is read forwards.
    std::vector<double> rev(n);
    for (std::size_t i = 0; i < n; ++i) rev[i] = f[n - 1 - i];
    const double* gv = g.values().data();
    const double* rv = rev.data();

#pragma omp parallel for schedule(dynamic, 256)
    for (std::size_t k = 1; k < n; ++k) {
        const double full = dot_reversed(gv, rv, n - 1 - k, 0, k + 1);
        out[k] = dt * (full - 0.5 * f[k] * g[0] - 0.5 * f[0] * g[k]);
    }

    SampledFunction result(dt, std::move(out));
    result.set_tail_mass(l1_norm(f) * l1_norm(g) - trapezoid(result));
    return result;
}

SampledFunction convolve(const Dirac&, const SampledFunction& g) { return g; }

SampledFunction convolve(const SampledFunction& f, const Dirac&) { return f; }

FunctionMatrix convolve(const FunctionMatrix& a, const FunctionMatrix& b) {
    require(a.dim() == b.dim(), "matrix convolve: dimension mismatch");
    const std::size_t d = a.dim();
    const std::size_t n = std::min(a.size(), b.size());
    FunctionMatrix c(d, a.dt(), n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> acc(n, 0.0);
            double tail = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                if (is_zero(a.at(i, k)) || is_zero(b.at(k, j))) continue;
                const auto term = convolve(a.at(i, k), b.at(k, j));
                for (std::size_t t = 0; t < n; ++t) acc[t] += term[t];
                tail += term.tail_mass();
            }
            c.at(i, j) = SampledFunction(a.dt(), std::move(acc), tail);
        }
    }
    return c;
}

SampledFunction kappa_resolvent(const SampledFunction& phi) {
    const std::size_t n = phi.size();
    const double dt = phi.dt();
    std::vector<double> kappa(n, 0.0);
    if (n == 0) return SampledFunction(dt, std::move(kappa));

    std::vector<double> rev(n);
    for (std::size_t i = 0; i < n; ++i) rev[i] = phi[n - 1 - i];
    const double* rv = rev.data();
    const double denom = 1.0 + 0.5 * dt * phi[0];
    kappa[0] = phi[0];

    // Rows of a block only depend on earlier blocks through a dot product that
    // can be evaluated in parallel; the in-block recursion stays sequential.
    constexpr std::size_t block = 512;
    std::vector<double> partial(block);
    for (std::size_t k0 = 1; k0 < n; k0 += block) {
        const std::size_t k1 = std::min(n, k0 + block);
        const double* kv = kappa.data();
#pragma omp parallel for schedule(static)
        for (std::size_t k = k0; k < k1; ++k) {
            partial[k - k0] = dot_reversed(kv, rv, n - 1 - k, 1, k0);
        }
        for (std::size_t k = k0; k < k1; ++k) {
            double s = partial[k - k0] + dot_reversed(kv, rv, n - 1 - k, k0, k);
            s += 0.5 * phi[k] * kappa[0];
            kappa[k] = (phi[k] - dt * s) / denom;
        }
    }

    SampledFunction result(dt, std::move(kappa));
    const double norm = l1_norm(phi);
    result.set_tail_mass(norm / (1.0 + norm) - trapezoid(result));
    return result;
}

} // namespace himpact
