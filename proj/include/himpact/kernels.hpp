#pragma once

// Causal kernels on a uniform time grid and the convolution-series machinery
// (kappa, Psi) behind the analytic impact formulas.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace himpact {

/// Causal function sampled at t = k * dt, k = 0..size()-1, implicitly zero for
/// t < 0. The mass beyond the last grid point is carried as a scalar.
class SampledFunction {
public:
    SampledFunction() = default;
    SampledFunction(double dt, std::vector<double> values, double tail_mass = 0.0);

    static SampledFunction zeros(double dt, std::size_t size);

    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] double horizon() const noexcept {
        return values_.empty() ? 0.0 : dt_ * static_cast<double>(values_.size() - 1);
    }
    [[nodiscard]] double tail_mass() const noexcept { return tail_mass_; }
    void set_tail_mass(double mass) noexcept { tail_mass_ = mass; }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::vector<double>& mutable_values() noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return values_[k]; }
    [[nodiscard]] double time(std::size_t k) const noexcept { return dt_ * static_cast<double>(k); }

    /// Linear interpolation; 0 for t < 0, last value for t beyond the horizon.
    [[nodiscard]] double at(double t) const noexcept;

    /// Copy truncated to the first `size` samples (tail mass dropped).
    [[nodiscard]] SampledFunction truncated(std::size_t size) const;

private:
    double dt_{1.0};
    std::vector<double> values_;
    double tail_mass_{0.0};
};

/// phi(t) = alpha * (offset + t)^b with b in (-2, -1).
struct PowerLawKernel {
    double alpha{0.0};
    double b{-1.5};
    double offset{0.25};

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double l1_norm() const;
    /// Integral over [0, t].
    [[nodiscard]] double integral(double t) const;
    /// Integral over [t, inf).
    [[nodiscard]] double tail_beyond(double t) const;

    /// Kernel whose L1 norm equals `norm`.
    [[nodiscard]] static PowerLawKernel with_norm(double norm, double b, double offset = 0.25);
};

/// phi(t) = alpha * exp(-beta t).
struct ExponentialKernel {
    double alpha{0.0};
    double beta{1.0};

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double l1_norm() const;
    [[nodiscard]] double integral(double t) const;
    [[nodiscard]] double tail_beyond(double t) const;

    [[nodiscard]] static ExponentialKernel with_norm(double norm, double beta);
};

using Kernel = std::variant<PowerLawKernel, ExponentialKernel>;

void validate(const Kernel& kernel);
[[nodiscard]] double evaluate(const Kernel& kernel, double t);
[[nodiscard]] double l1_norm(const Kernel& kernel);
[[nodiscard]] double kernel_integral(const Kernel& kernel, double t);
[[nodiscard]] double tail_beyond(const Kernel& kernel, double t);
[[nodiscard]] std::string family_name(const Kernel& kernel);

/// Dirac mass at 0. Never gridded: convolving with it returns the other operand.
struct Dirac {};

SampledFunction sample_kernel(const Kernel& kernel, double dt, double horizon);

/// Trapezoidal integral over the grid only.
[[nodiscard]] double trapezoid(const SampledFunction& f);
/// Trapezoidal integral plus the carried tail mass.
[[nodiscard]] double l1_norm(const SampledFunction& f);
[[nodiscard]] double l1_norm(const SampledFunction& f, double tail_mass);

/// Running trapezoidal integral F(t_k) = int_0^{t_k} f.
[[nodiscard]] SampledFunction cumulative_integral(const SampledFunction& f);

/// Causal convolution (f * g)(t_k) = int_0^{t_k} f(t_k - u) g(u) du with
/// trapezoidal weights. The result has min(f.size(), g.size()) samples; values
/// past the shorter horizon are not computed. Tail mass is propagated from
/// ||f * g||_1 = ||f||_1 ||g||_1. OpenMP-parallel over output points.
[[nodiscard]] SampledFunction convolve(const SampledFunction& f, const SampledFunction& g);
[[nodiscard]] SampledFunction convolve(const Dirac&, const SampledFunction& g);
[[nodiscard]] SampledFunction convolve(const SampledFunction& f, const Dirac&);

struct SeriesOptions {
    double tol{1e-6};
    std::size_t max_terms{100000};
};

struct KappaResult {
    SampledFunction kappa;
    std::size_t terms{0};
    /// phi >= phi*phi on the grid (needed for kappa >= 0 and the decay-exponent claim).
    bool phi_dominates_square{true};
    std::vector<std::string> warnings;
};

/// kappa = sum_{n>=1} (-1)^{n-1} phi^{*n}, truncated when the next term's L1
/// norm drops below tol. Throws if ||phi||_1 >= 1.
[[nodiscard]] KappaResult kappa_series(const SampledFunction& phi, const SeriesOptions& options = {});

/// Same kappa obtained by solving kappa + phi * kappa = phi (trapezoidal
/// Volterra equation) directly in one pass. Blocked, OpenMP-parallel.
[[nodiscard]] SampledFunction kappa_resolvent(const SampledFunction& phi);

/// Numerical check of phi >= phi*phi on the grid (with a small relative slack).
[[nodiscard]] bool dominates_self_convolution(const SampledFunction& phi);

/// Square d x d matrix of sampled functions on a common grid.
class FunctionMatrix {
public:
    FunctionMatrix() = default;
    FunctionMatrix(std::size_t dim, double dt, std::size_t size);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    /// Shortest entry length.
    [[nodiscard]] std::size_t size() const noexcept;

    [[nodiscard]] SampledFunction& at(std::size_t i, std::size_t j) { return entries_[i * dim_ + j]; }
    [[nodiscard]] const SampledFunction& at(std::size_t i, std::size_t j) const {
        return entries_[i * dim_ + j];
    }

    /// Entrywise L1 norms (grid + tail).
    [[nodiscard]] std::vector<double> l1_norms() const;

private:
    std::size_t dim_{0};
    double dt_{1.0};
    std::vector<SampledFunction> entries_;
};

/// c_ij = sum_k a_ik * b_kj. Zero entries are skipped.
[[nodiscard]] FunctionMatrix convolve(const FunctionMatrix& a, const FunctionMatrix& b);

/// Spectral radius of a d x d row-major matrix.
[[nodiscard]] double spectral_radius(std::span<const double> matrix, std::size_t dim);

struct PsiResult {
    FunctionMatrix psi;
    std::size_t terms{0};
};

/// Psi = sum_{n>=1} Phi^{*n}. Throws unless rho(K) < 1 for K = entrywise L1 norms.
[[nodiscard]] PsiResult psi_series(const FunctionMatrix& phi, const SeriesOptions& options = {});

namespace reference {

/// Serial single-threaded convolution, kept as the oracle for the parallel kernel.
[[nodiscard]] SampledFunction convolve(const SampledFunction& f, const SampledFunction& g);

/// Serial row-by-row Volterra solve for kappa.
[[nodiscard]] SampledFunction kappa_resolvent(const SampledFunction& phi);

} // namespace reference

} // namespace himpact
