#pragma once

// Analytic impact curves of the HIM and impulsive-HIM price models.

#include "himpact/him_spec.hpp"
#include "himpact/kernels.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace himpact {

enum class KappaMethod { resolvent, series };

struct CurveOptions {
    double dt{1e-2};
    /// Kernel grid horizon; 0 picks the curve span, capped by max_points.
    double horizon{0.0};
    std::size_t max_points{200001};
    KappaMethod method{KappaMethod::resolvent};
    SeriesOptions series{};
};

struct AnalyticCurve {
    std::vector<double> t;
    std::vector<double> eta;
    double grid_horizon{0.0};
    /// Bound on the error from extrapolating the response past the grid horizon.
    double truncation_estimate{0.0};
    std::vector<std::string> warnings;
};

/// G(t) = int_0^t (g+ - g-). With g+ = delta, G(0) holds the right limit 1.
[[nodiscard]] SampledFunction g_function(const Dirac&, const SampledFunction& g_minus);
[[nodiscard]] SampledFunction g_function(const SampledFunction& g_plus, const SampledFunction& g_minus);

/// Impulsive G = 1 - (C/||phi||) int_0^t phi, from the kernel primitive.
[[nodiscard]] SampledFunction g_function_impulsive(const Kernel& phi, double C, double dt, double horizon);

struct HFunction {
    SampledFunction h;
    /// (1 - C) / (1 + ||phi||_1)
    double limit{0.0};
    std::size_t kappa_terms{0};
    std::vector<std::string> warnings;
};

/// H(t) = 1 - (1 + C/||phi||) int_0^t kappa.
[[nodiscard]] HFunction h_function(const SampledFunction& phi, double C, KappaMethod method = KappaMethod::resolvent,
                                   const SeriesOptions& series = {});

[[nodiscard]] double h_limit(double phi_norm, double C);

/// eta at each t of t_grid for the impulsive model: int f(r_s) H(t - s) ds.
[[nodiscard]] AnalyticCurve impact_curve_analytic(const HimSpec& spec, std::span<const double> t_grid,
                                                  const CurveOptions& options = {});

/// General route: eta_t = int f(r_s) (G - kappa * G)(t - s) ds for arbitrary
/// g+ (Dirac or gridded) and gridded g-, all on phi's grid.
[[nodiscard]] AnalyticCurve impact_curve_general(const TradingSchedule& schedule, const ImpactFunction& f,
                                                 const std::variant<Dirac, SampledFunction>& g_plus,
                                                 const SampledFunction& g_minus, const SampledFunction& phi,
                                                 std::span<const double> t_grid,
                                                 KappaMethod method = KappaMethod::resolvent);

/// f(r) T (1 - C) / (1 + ||phi||_1). Constant-rate schedules only.
[[nodiscard]] double permanent_impact(const HimSpec& spec);

struct PermanentEstimate {
    double value{0.0};
    double at_time{0.0};
    double truncation_estimate{0.0};
};

/// Curve value at t0 + multiple * T (any schedule; T is the schedule span).
[[nodiscard]] PermanentEstimate permanent_impact_numeric(const HimSpec& spec, double multiple = 100.0,
                                                         const CurveOptions& options = {});

struct DecayFit {
    double exponent{0.0};
    double prefactor{0.0};
    double r2{0.0};
    /// Slopes on the two halves of the window agree (power-law tail).
    bool power_law_like{false};
    double slope_early{0.0};
    double slope_late{0.0};
};

/// Log-log slope of eta_t - eta_inf against t - t0 - T for t in [t_lo, t_hi].
[[nodiscard]] DecayFit decay_exponent(const HimSpec& spec, double t_lo, double t_hi, const CurveOptions& options = {},
                                      std::size_t points = 60);

} // namespace himpact
