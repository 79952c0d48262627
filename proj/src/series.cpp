#include "himpact/error.hpp"
#include "himpact/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace himpact {

namespace {

bool dominates(const SampledFunction& phi, const SampledFunction& square) {
    double scale = 0.0;
    for (double v : phi.values()) scale = std::max(scale, std::abs(v));
    const double slack = 1e-9 * scale;
    for (std::size_t k = 0; k < square.size(); ++k) {
        if (phi[k] + slack < square[k]) return false;
    }
    return true;
}

} // namespace

bool dominates_self_convolution(const SampledFunction& phi) { return dominates(phi, convolve(phi, phi)); }

KappaResult kappa_series(const SampledFunction& phi, const SeriesOptions& options) {
    require(options.tol > 0.0, "kappa_series: tol must be > 0");
    const double norm = l1_norm(phi);
    if (!(norm < 1.0)) {
        std::ostringstream msg;
        msg << "kappa_series: ||phi||_1 = " << norm << " >= 1, series not summable";
        fail("not_stationary", msg.str());
    }

    KappaResult result;
    std::vector<double> kappa(phi.values().begin(), phi.values().end());
    double tail = phi.tail_mass();
    SampledFunction term = phi;
    std::size_t n = 1;
    double sign = 1.0;
    while (l1_norm(term) >= options.tol && n < options.max_terms) {
        term = convolve(phi, term);
        ++n;
        sign = -sign;
        if (n == 2) result.phi_dominates_square = dominates(phi, term);
        for (std::size_t k = 0; k < kappa.size(); ++k) kappa[k] += sign * term[k];
        tail += sign * term.tail_mass();
    }
    result.terms = n;
    result.kappa = SampledFunction(phi.dt(), std::move(kappa), tail);
    if (n == 1 && norm > 0.0) result.phi_dominates_square = dominates_self_convolution(phi);
    if (!result.phi_dominates_square) {
        result.warnings.emplace_back("phi >= phi*phi does not hold on the grid; kappa may change sign");
    }
    if (n >= options.max_terms) {
        result.warnings.emplace_back("kappa_series: max_terms reached before tolerance");
    }
    return result;
}

PsiResult psi_series(const FunctionMatrix& phi, const SeriesOptions& options) {
    require(options.tol > 0.0, "psi_series: tol must be > 0");
    const std::size_t d = phi.dim();
    const auto norms = phi.l1_norms();
    const double rho = spectral_radius(norms, d);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "psi_series: spectral radius of the L1-norm matrix is " << rho << " >= 1";
        fail("not_stationary", msg.str());
    }

    auto max_norm = [](const FunctionMatrix& m) {
        const auto v = m.l1_norms();
        double out = 0.0;
        for (double x : v) out = std::max(out, std::abs(x));
        return out;
    };

    PsiResult result;
    result.psi = phi;
    FunctionMatrix term = phi;
    std::size_t n = 1;
    while (max_norm(term) >= options.tol && n < options.max_terms) {
        term = convolve(term, phi);
        ++n;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                auto& acc = result.psi.at(i, j).mutable_values();
                const auto& add = term.at(i, j);
                for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += add[k];
                result.psi.at(i, j).set_tail_mass(result.psi.at(i, j).tail_mass() + add.tail_mass());
            }
        }
    }
    result.terms = n;
    return result;
}

} // namespace himpact
