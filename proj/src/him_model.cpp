#include "himpact/him_model.hpp"

#include "himpact/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace himpact {

// ---------------------------------------------------------------------------
// HimSpec pieces

double ImpactFunction::operator()(double rate) const {
    if (rate <= 0.0) return 0.0;
    return a * std::pow(rate, p);
}

TradingSchedule TradingSchedule::constant(double t0, double duration, double rate) {
    TradingSchedule s;
    s.segments.push_back({t0, t0 + duration, rate});
    return s;
}

double TradingSchedule::start() const { return segments.empty() ? 0.0 : segments.front().start; }

double TradingSchedule::end() const { return segments.empty() ? 0.0 : segments.back().end; }

double TradingSchedule::rate_at(double t) const {
    for (const auto& s : segments) {
        if (t >= s.start && t < s.end) return s.rate;
    }
    return 0.0;
}

void HimSpec::validate() const {
    require(std::isfinite(mu) && mu >= 0.0, "HimSpec: mu must be >= 0");
    himpact::validate(phi);
    const double norm = l1_norm(phi);
    if (!(norm < 1.0)) {
        std::ostringstream msg;
        msg << "HimSpec: ||phi||_1 = " << norm << " >= 1 (non-stationary)";
        fail("not_stationary", msg.str());
    }
    require(std::isfinite(C) && C >= 0.0, "HimSpec: C must be >= 0");
    require(norm > 0.0 || C == 0.0, "HimSpec: C > 0 needs a kernel with nonzero norm");
    require(std::isfinite(f.a) && f.a >= 0.0, "HimSpec: f.a must be >= 0");
    require(std::isfinite(f.p) && f.p > 0.0, "HimSpec: f.p must be > 0");
    require(!schedule.segments.empty(), "HimSpec: schedule has no segments");
    for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& s = schedule.segments[i];
        require(std::isfinite(s.start) && std::isfinite(s.end) && s.end > s.start,
                "HimSpec: schedule segment needs start < end");
        require(std::isfinite(s.rate) && s.rate >= 0.0, "HimSpec: trading rate must be >= 0");
        if (i > 0) require(s.start >= schedule.segments[i - 1].end, "HimSpec: schedule segments overlap or are unsorted");
    }
    require(schedule.start() >= 0.0, "HimSpec: schedule must start at t >= 0");
}

// ---------------------------------------------------------------------------
// G and H

SampledFunction g_function(const Dirac&, const SampledFunction& g_minus) {
    auto g = cumulative_integral(g_minus);
    for (auto& v : g.mutable_values()) v = 1.0 - v;
    return g;
}

SampledFunction g_function(const SampledFunction& g_plus, const SampledFunction& g_minus) {
    require(std::abs(g_plus.dt() - g_minus.dt()) <= 1e-12 * g_plus.dt(), "g_function: operands must share dt");
    const std::size_t n = std::min(g_plus.size(), g_minus.size());
    std::vector<double> diff(n);
    for (std::size_t k = 0; k < n; ++k) diff[k] = g_plus[k] - g_minus[k];
    return cumulative_integral(SampledFunction(g_plus.dt(), std::move(diff)));
}

SampledFunction g_function_impulsive(const Kernel& phi, double C, double dt, double horizon) {
    validate(phi);
    require(dt > 0.0 && horizon >= dt, "g_function_impulsive: need dt > 0 and horizon >= dt");
    const double norm = l1_norm(phi);
    const double w = norm > 0.0 ? C / norm : 0.0;
    const auto n = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = 1.0 - w * kernel_integral(phi, dt * static_cast<double>(k));
    return SampledFunction(dt, std::move(v));
}

double h_limit(double phi_norm, double C) { return (1.0 - C) / (1.0 + phi_norm); }

namespace {

SampledFunction solve_kappa(const SampledFunction& phi, KappaMethod method, const SeriesOptions& series,
                            std::size_t& terms, std::vector<std::string>& warnings) {
    if (method == KappaMethod::series) {
        auto r = kappa_series(phi, series);
        terms = r.terms;
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
        return std::move(r.kappa);
    }
    const double norm = l1_norm(phi);
    if (!(norm < 1.0)) {
        std::ostringstream msg;
        msg << "||phi||_1 = " << norm << " >= 1, kappa undefined";
        fail("not_stationary", msg.str());
    }
    auto kappa = kappa_resolvent(phi);
    terms = 0;
    const auto v = kappa.values();
    if (std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; })) {
        warnings.emplace_back("kappa takes negative values on the grid");
    }
    return kappa;
}

// Response R on a grid and its primitive A(x) = int_0^x R, extended linearly
// with slope `limit` past the grid horizon.
struct Response {
    SampledFunction r;
    SampledFunction a;
    double limit{0.0};

    Response(SampledFunction values, double lim) : r(std::move(values)), a(cumulative_integral(r)), limit(lim) {}

    [[nodiscard]] double primitive(double x) const {
        if (x <= 0.0) return 0.0;
        const std::size_t n = r.size();
        const double dt = r.dt();
        const double hz = r.horizon();
        if (n < 2) return limit * x;
        if (x >= hz) return a[n - 1] + limit * (x - hz);
        const auto k = std::min(static_cast<std::size_t>(x / dt), n - 2);
        const double u = x - r.time(k);
        const double slope = (r[k + 1] - r[k]) / dt;
        return a[k] + u * (r[k] + 0.5 * slope * u);
    }

    // Extrapolation error per unit length past the horizon.
    [[nodiscard]] double drift() const { return r.empty() ? 0.0 : std::abs(r[r.size() - 1] - limit); }
};

AnalyticCurve integrate_schedule(const Response& resp, const TradingSchedule& schedule, const ImpactFunction& f,
                                 std::span<const double> t_grid) {
    AnalyticCurve out;
    out.grid_horizon = resp.r.horizon();
    const double drift = resp.drift();
    for (double t : t_grid) {
        double eta = 0.0;
        for (const auto& seg : schedule.segments) {
            const double level = f(seg.rate);
            if (level == 0.0 || t <= seg.start) continue;
            eta += level * (resp.primitive(t - seg.start) - resp.primitive(t - seg.end));
            const double beyond = std::max(0.0, t - seg.start - out.grid_horizon);
            out.truncation_estimate = std::max(out.truncation_estimate, level * drift * beyond);
        }
        out.t.push_back(t);
        out.eta.push_back(eta);
    }
    return out;
}

double pick_horizon(std::span<const double> t_grid, double t0, const CurveOptions& options) {
    require(std::isfinite(options.dt) && options.dt > 0.0, "curve: dt must be > 0");
    require(options.max_points >= 2, "curve: max_points must be >= 2");
    double span = 0.0;
    for (double t : t_grid) {
        require(std::isfinite(t), "curve: non-finite time");
        span = std::max(span, t - t0);
    }
    double h = options.horizon > 0.0 ? options.horizon : span;
    h = std::min(h, options.dt * static_cast<double>(options.max_points - 1));
    return std::max(h, options.dt);
}

} // namespace

HFunction h_function(const SampledFunction& phi, double C, KappaMethod method, const SeriesOptions& series) {
    require(C >= 0.0, "h_function: C must be >= 0");
    HFunction out;
    const double norm = l1_norm(phi);
    require(norm > 0.0 || C == 0.0, "h_function: C > 0 needs a kernel with nonzero norm");
    const auto kappa = solve_kappa(phi, method, series, out.kappa_terms, out.warnings);
    auto h = cumulative_integral(kappa);
    const double w = 1.0 + (norm > 0.0 ? C / norm : 0.0);
    for (auto& v : h.mutable_values()) v = 1.0 - w * v;
    out.h = std::move(h);
    out.limit = h_limit(norm, C);
    return out;
}

AnalyticCurve impact_curve_analytic(const HimSpec& spec, std::span<const double> t_grid, const CurveOptions& options) {
    spec.validate();
    const double horizon = pick_horizon(t_grid, spec.t0(), options);
    const auto phi = sample_kernel(spec.phi, options.dt, horizon);
    auto hf = h_function(phi, spec.C, options.method, options.series);
    // Far tail: extrapolated towards the level from the analytic norm.
    const Response resp(std::move(hf.h), h_limit(l1_norm(spec.phi), spec.C));
    auto curve = integrate_schedule(resp, spec.schedule, spec.f, t_grid);
    curve.warnings = std::move(hf.warnings);
    return curve;
}

AnalyticCurve impact_curve_general(const TradingSchedule& schedule, const ImpactFunction& f,
                                   const std::variant<Dirac, SampledFunction>& g_plus, const SampledFunction& g_minus,
                                   const SampledFunction& phi, std::span<const double> t_grid, KappaMethod method) {
    require(std::abs(phi.dt() - g_minus.dt()) <= 1e-12 * phi.dt(), "impact_curve_general: kernels must share dt");
    double g_inf = 0.0;
    SampledFunction g;
    if (std::holds_alternative<Dirac>(g_plus)) {
        g = g_function(Dirac{}, g_minus);
        g_inf = 1.0 - l1_norm(g_minus);
    } else {
        const auto& gp = std::get<SampledFunction>(g_plus);
        g = g_function(gp, g_minus);
        g_inf = l1_norm(gp) - l1_norm(g_minus);
    }
    std::size_t terms = 0;
    std::vector<std::string> warnings;
    const auto kappa = solve_kappa(phi, method, {}, terms, warnings);
    const auto kg = convolve(kappa, g);
    std::vector<double> r(kg.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = g[k] - kg[k];
    const Response resp(SampledFunction(phi.dt(), std::move(r)), g_inf * (1.0 - l1_norm(kappa)));
    auto curve = integrate_schedule(resp, schedule, f, t_grid);
    curve.warnings = std::move(warnings);
    return curve;
}

double permanent_impact(const HimSpec& spec) {
    spec.validate();
    if (!spec.schedule.is_constant()) {
        fail("invalid_argument", "permanent_impact: closed form needs a constant-rate schedule; use permanent_impact_numeric");
    }
    const auto& seg = spec.schedule.segments.front();
    return spec.f(seg.rate) * (seg.end - seg.start) * h_limit(l1_norm(spec.phi), spec.C);
}

PermanentEstimate permanent_impact_numeric(const HimSpec& spec, double multiple, const CurveOptions& options) {
    require(multiple > 1.0, "permanent_impact_numeric: multiple must be > 1");
    PermanentEstimate out;
    out.at_time = spec.t0() + multiple * spec.duration();
    const double t[] = {out.at_time};
    const auto curve = impact_curve_analytic(spec, t, options);
    out.value = curve.eta.front();
    out.truncation_estimate = curve.truncation_estimate;
    return out;
}

DecayFit decay_exponent(const HimSpec& spec, double t_lo, double t_hi, const CurveOptions& options,
                        std::size_t points) {
    spec.validate();
    const double end = spec.schedule.end();
    require(t_lo > end, "decay_exponent: window must start after the execution ends");
    require(t_hi > t_lo, "decay_exponent: empty window");
    require(points >= 4, "decay_exponent: need at least 4 points");

    std::vector<double> t(points);
    const double l0 = std::log(t_lo - end), l1 = std::log(t_hi - end);
    for (std::size_t i = 0; i < points; ++i) {
        t[i] = end + std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    const auto curve = impact_curve_analytic(spec, t, options);
    const double eta_inf = spec.schedule.is_constant() ? permanent_impact(spec)
                                                       : permanent_impact_numeric(spec, 100.0, options).value;

    std::vector<double> x(points), y(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double d = curve.eta[i] - eta_inf;
        if (!(d > 0.0)) {
            std::ostringstream msg;
            msg << "decay_exponent: eta - eta_inf = " << d << " <= 0 at t = " << t[i];
            fail("invalid_argument", msg.str());
        }
        x[i] = std::log(t[i] - end);
        y[i] = std::log(d);
    }

    auto ols = [&](std::size_t lo, std::size_t hi, double& slope, double& icpt, double& r2) {
        const double n = static_cast<double>(hi - lo);
        double mx = 0.0, my = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            sxx += (x[i] - mx) * (x[i] - mx);
            sxy += (x[i] - mx) * (y[i] - my);
            syy += (y[i] - my) * (y[i] - my);
        }
        slope = sxy / sxx;
        icpt = my - slope * mx;
        r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    };

    DecayFit fit;
    double icpt = 0.0, dummy = 0.0, dummy_r2 = 0.0;
    ols(0, points, fit.exponent, icpt, fit.r2);
    fit.prefactor = std::exp(icpt);
    ols(0, points / 2, fit.slope_early, dummy, dummy_r2);
    ols(points / 2, points, fit.slope_late, dummy, dummy_r2);
    fit.power_law_like = std::abs(fit.slope_early - fit.slope_late) < 0.25 && fit.r2 > 0.99;
    return fit;
}

} // namespace himpact
