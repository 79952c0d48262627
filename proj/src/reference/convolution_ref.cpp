// Serial reference kernels. Plain index loops, no vectorisation pragmas; the
// parallel versions in convolution.cpp are tested against these.

#include "himpact/error.hpp"
#include "himpact/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace himpact::reference {

SampledFunction convolve(const SampledFunction& f, const SampledFunction& g) {
    require(std::abs(f.dt() - g.dt()) <= 1e-12 * std::max(f.dt(), g.dt()),
            "convolve: operands must share the same dt");
    const std::size_t n = std::min(f.size(), g.size());
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        double sum = 0.5 * f[k] * g[0] + 0.5 * f[0] * g[k];
        for (std::size_t j = 1; j < k; ++j) sum += f[k - j] * g[j];
        out[k] = f.dt() * sum;
    }
    SampledFunction result(f.dt(), std::move(out));
    result.set_tail_mass(l1_norm(f) * l1_norm(g) - trapezoid(result));
    return result;
}

SampledFunction kappa_resolvent(const SampledFunction& phi) {
    const std::size_t n = phi.size();
    const double dt = phi.dt();
    std::vector<double> kappa(n, 0.0);
    if (n > 0) kappa[0] = phi[0];
    const double denom = 1.0 + 0.5 * dt * (n > 0 ? phi[0] : 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        double s = 0.5 * phi[k] * kappa[0];
        for (std::size_t j = 1; j < k; ++j) s += phi[k - j] * kappa[j];
        kappa[k] = (phi[k] - dt * s) / denom;
    }
    SampledFunction result(dt, std::move(kappa));
    const double norm = l1_norm(phi);
    result.set_tail_mass(norm / (1.0 + norm) - trapezoid(result));
    return result;
}

} // namespace himpact::reference
