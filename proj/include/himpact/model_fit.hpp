#pragma once

// Joint calibration of the impulsive model (power-law phi, one C per curve) to
// a family of rescaled impact curves.

#include "himpact/impact_estimation.hpp"

#include <string>
#include <vector>

namespace himpact {

struct FitProblem {
    /// Curves on rescaled time, s in [0, 2].
    std::vector<ImpactCurve> curves;
    /// Physical duration of each curve, seconds.
    std::vector<double> durations;
    /// Kernel time unit in seconds; phi(u) = alpha (offset + u)^b with u in this unit.
    double time_unit{60.0};
    double offset{0.25};
    double norm_lo{0.02}, norm_hi{0.98};
    double b_lo{-1.95}, b_hi{-1.05};
    double C_max{1.0};

    void validate() const;
};

struct FitParams {
    double norm{0.5};
    double b{-1.5};
    std::vector<double> C;
};

struct FitConfig {
    /// Kernel grid step in time_unit.
    double dt{0.02};
    std::size_t starts{8};
    std::size_t coarse_cycles{4};
    std::size_t max_cycles{60};
    std::size_t max_evaluations{20000};
    double tol{1e-6};
};

struct FitResult {
    double alpha{0.0};
    double norm{0.0};
    double b{0.0};
    std::vector<double> C;
    /// Multiplier applied to each unit-rate model curve so it matches eta_1.
    std::vector<double> scale;
    double objective{0.0};
    /// objective / sum_i int eta_i^2 ds
    double relative_objective{0.0};
    bool converged{false};
    std::size_t evaluations{0};
    std::size_t cycles{0};
    std::string diagnostics;
};

/// sum_i int_0^2 (scale_i eta_model(s T_i) - eta_i(s))^2 ds, trapezoid on each curve's grid.
[[nodiscard]] double objective(const FitParams& params, const FitProblem& problem, const FitConfig& config = {});

/// Anchored model curves on each problem curve's s grid.
[[nodiscard]] std::vector<ImpactCurve> model_curves(const FitParams& params, const FitProblem& problem,
                                                    const FitConfig& config = {});

/// Deterministic multistart coordinate descent; never leaves the bounds.
[[nodiscard]] FitResult fit(const FitProblem& problem, const FitConfig& config = {});

} // namespace himpact
