#include "himpact/kernels.hpp"

#include "himpact/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace himpact {

SampledFunction::SampledFunction(double dt, std::vector<double> values, double tail_mass)
    : dt_(dt), values_(std::move(values)), tail_mass_(tail_mass) {
    require(std::isfinite(dt) && dt > 0.0, "SampledFunction: dt must be finite and > 0");
    require(std::isfinite(tail_mass), "SampledFunction: tail mass must be finite");
    for (double v : values_) {
        require(std::isfinite(v), "SampledFunction: values must be finite");
    }
}

SampledFunction SampledFunction::zeros(double dt, std::size_t size) {
    return SampledFunction(dt, std::vector<double>(size, 0.0));
}

double SampledFunction::at(double t) const noexcept {
    if (values_.empty() || t < 0.0) return 0.0;
    const double x = t / dt_;
    const auto last = values_.size() - 1;
    if (x >= static_cast<double>(last)) return values_[last];
    const auto k = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * values_[k] + w * values_[k + 1];
}

SampledFunction SampledFunction::truncated(std::size_t size) const {
    size = std::min(size, values_.size());
    return SampledFunction(dt_, std::vector<double>(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(size)));
}

// ---------------------------------------------------------------------------
// Analytic kernels

double PowerLawKernel::operator()(double t) const {
    return t < 0.0 ? 0.0 : alpha * std::pow(offset + t, b);
}

double PowerLawKernel::l1_norm() const { return alpha * std::pow(offset, b + 1.0) / (-b - 1.0); }

double PowerLawKernel::integral(double t) const {
    if (t <= 0.0) return 0.0;
    return alpha / (b + 1.0) * (std::pow(offset + t, b + 1.0) - std::pow(offset, b + 1.0));
}

double PowerLawKernel::tail_beyond(double t) const {
    t = std::max(t, 0.0);
    return alpha * std::pow(offset + t, b + 1.0) / (-b - 1.0);
}

PowerLawKernel PowerLawKernel::with_norm(double norm, double b, double offset) {
    require(b > -2.0 && b < -1.0, "power-law exponent b must lie in (-2, -1)");
    require(offset > 0.0, "power-law offset must be > 0");
    return PowerLawKernel{norm * (-b - 1.0) / std::pow(offset, b + 1.0), b, offset};
}

double ExponentialKernel::operator()(double t) const { return t < 0.0 ? 0.0 : alpha * std::exp(-beta * t); }

double ExponentialKernel::l1_norm() const { return alpha / beta; }

double ExponentialKernel::integral(double t) const {
    if (t <= 0.0) return 0.0;
    return alpha / beta * -std::expm1(-beta * t);
}

double ExponentialKernel::tail_beyond(double t) const {
    return alpha / beta * std::exp(-beta * std::max(t, 0.0));
}

ExponentialKernel ExponentialKernel::with_norm(double norm, double beta) {
    require(beta > 0.0, "exponential decay rate must be > 0");
    return ExponentialKernel{norm * beta, beta};
}

void validate(const Kernel& kernel) {
    if (const auto* p = std::get_if<PowerLawKernel>(&kernel)) {
        require(std::isfinite(p->alpha) && p->alpha >= 0.0, "power-law alpha must be finite and >= 0");
        require(std::isfinite(p->b) && p->b > -2.0 && p->b < -1.0, "power-law b must lie in (-2, -1)");
        require(std::isfinite(p->offset) && p->offset > 0.0, "power-law offset must be > 0");
    } else {
        const auto& e = std::get<ExponentialKernel>(kernel);
        require(std::isfinite(e.alpha) && e.alpha >= 0.0, "exponential alpha must be finite and >= 0");
        require(std::isfinite(e.beta) && e.beta > 0.0, "exponential beta must be finite and > 0");
    }
}

double evaluate(const Kernel& kernel, double t) {
    return std::visit([t](const auto& k) { return k(t); }, kernel);
}

double l1_norm(const Kernel& kernel) {
    return std::visit([](const auto& k) { return k.l1_norm(); }, kernel);
}

double kernel_integral(const Kernel& kernel, double t) {
    return std::visit([t](const auto& k) { return k.integral(t); }, kernel);
}

double tail_beyond(const Kernel& kernel, double t) {
    return std::visit([t](const auto& k) { return k.tail_beyond(t); }, kernel);
}

std::string family_name(const Kernel& kernel) {
    return std::holds_alternative<PowerLawKernel>(kernel) ? "power_law" : "exponential";
}

SampledFunction sample_kernel(const Kernel& kernel, double dt, double horizon) {
    validate(kernel);
    require(std::isfinite(dt) && dt > 0.0, "sample_kernel: dt must be finite and > 0");
    require(std::isfinite(horizon) && horizon >= dt, "sample_kernel: horizon must be >= dt");
    const auto n = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1;
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = evaluate(kernel, dt * static_cast<double>(k));
    return SampledFunction(dt, std::move(values), tail_beyond(kernel, dt * static_cast<double>(n - 1)));
}

// ---------------------------------------------------------------------------
// Quadrature

double trapezoid(const SampledFunction& f) {
    const auto v = f.values();
    if (v.size() < 2) return 0.0;
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) sum += v[k];
    return sum * f.dt();
}

double l1_norm(const SampledFunction& f) { return trapezoid(f) + f.tail_mass(); }

double l1_norm(const SampledFunction& f, double tail_mass) { return trapezoid(f) + tail_mass; }

SampledFunction cumulative_integral(const SampledFunction& f) {
    const auto v = f.values();
    std::vector<double> out(v.size(), 0.0);
    const double h = 0.5 * f.dt();
    for (std::size_t k = 1; k < v.size(); ++k) out[k] = out[k - 1] + h * (v[k - 1] + v[k]);
    return SampledFunction(f.dt(), std::move(out));
}

// ---------------------------------------------------------------------------
// Matrices of functions

FunctionMatrix::FunctionMatrix(std::size_t dim, double dt, std::size_t size)
    : dim_(dim), dt_(dt), entries_(dim * dim, SampledFunction::zeros(dt, size)) {}

std::size_t FunctionMatrix::size() const noexcept {
    if (entries_.empty()) return 0;
    std::size_t n = entries_.front().size();
    for (const auto& e : entries_) n = std::min(n, e.size());
    return n;
}

std::vector<double> FunctionMatrix::l1_norms() const {
    std::vector<double> out(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = l1_norm(entries_[i]);
    return out;
}

double spectral_radius(std::span<const double> matrix, std::size_t dim) {
    require(matrix.size() == dim * dim, "spectral_radius: matrix size mismatch");
    if (dim == 0) return 0.0;
    Eigen::MatrixXd m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix[i * dim + j];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace himpact
