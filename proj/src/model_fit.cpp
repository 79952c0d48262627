#include "himpact/model_fit.hpp"

#include "himpact/error.hpp"
#include "himpact/him_model.hpp"
#include "himpact/kernels.hpp"
#include "himpact/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <sstream>

namespace himpact {

void FitProblem::validate() const {
    require(curves.size() == durations.size(), "fit problem: one duration per curve");
    require(time_unit > 0.0 && offset > 0.0, "fit problem: time_unit and offset must be > 0");
    require(norm_lo > 0.0 && norm_lo < norm_hi && norm_hi < 1.0, "fit problem: norm bounds must satisfy 0 < lo < hi < 1");
    require(b_lo > -2.0 && b_lo < b_hi && b_hi < -1.0, "fit problem: b bounds must satisfy -2 < lo < hi < -1");
    require(C_max >= 0.0, "fit problem: C_max must be >= 0");
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const std::string tag = "fit problem: curve " + std::to_string(i);
        require(durations[i] > 0.0 && std::isfinite(durations[i]), tag + " duration must be > 0");
        require(c.s.size() == c.mean.size() && c.s.size() >= 2, tag + " needs matching s and value columns");
        require(c.s.front() <= 1.0 && c.s.back() >= 1.0, tag + " must cover s = 1");
        for (std::size_t k = 1; k < c.s.size(); ++k) require(c.s[k] > c.s[k - 1], tag + " s must increase");
        for (double v : c.mean) require(std::isfinite(v), tag + " has non-finite values");
        require(c.at(1.0) != 0.0, tag + " has zero value at s = 1");
    }
}

namespace {

constexpr double kSEdge = 2.0 + 1e-12;

double trapz_sq(std::span<const double> s, std::span<const double> e) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k + 1] > kSEdge) break;
        acc += 0.5 * (s[k + 1] - s[k]) * (e[k] * e[k] + e[k + 1] * e[k + 1]);
    }
    return acc;
}

// Unit-rate model curves for fixed (norm, b). With A(x) = int_0^x H,
// eta(t) = A(t) - A(t - tau) = U(t) - w V(t), w = 1 + C / norm, where
// U = min(t, tau) and V = B(t) - B(t - tau), B = int int kappa.
class Model {
public:
    Model(const FitProblem& p, const FitConfig& cfg, double norm, double b) : p_(p), norm_(norm) {
        double tau_max = 0.0;
        for (double T : p.durations) tau_max = std::max(tau_max, T / p.time_unit);
        const Kernel phi = PowerLawKernel::with_norm(norm, b, p.offset);
        const auto sampled = sample_kernel(phi, cfg.dt, 2.0 * tau_max + 2.0 * cfg.dt);
        const auto h0 = h_function(sampled, 0.0);
        std::vector<double> k(h0.h.size());
        for (std::size_t i = 0; i < k.size(); ++i) k[i] = 1.0 - h0.h[i];
        const auto B = cumulative_integral(SampledFunction(cfg.dt, std::move(k)));
        auto Bat = [&](double x) { return x <= 0.0 ? 0.0 : B.at(x); };

        curves_.resize(p.curves.size());
        for (std::size_t i = 0; i < p.curves.size(); ++i) {
            const auto& c = p.curves[i];
            const double tau = p.durations[i] / p.time_unit;
            auto& m = curves_[i];
            m.target_one = c.at(1.0);
            m.U1 = tau;
            m.V1 = Bat(tau);
            for (std::size_t j = 0; j < c.s.size() && c.s[j] <= kSEdge; ++j) {
                const double t = c.s[j] * tau;
                m.s.push_back(c.s[j]);
                m.U.push_back(std::min(t, tau));
                m.V.push_back(Bat(t) - Bat(t - tau));
                m.target.push_back(c.mean[j]);
            }
            m.err.resize(m.s.size());
        }
    }

    [[nodiscard]] double scale(std::size_t i, double C) const {
        const auto& m = curves_[i];
        const double w = 1.0 + C / norm_;
        return m.target_one / (m.U1 - w * m.V1);
    }

    [[nodiscard]] std::vector<double> curve(std::size_t i, double C) const {
        const auto& m = curves_[i];
        const double w = 1.0 + C / norm_;
        const double k = scale(i, C);
        std::vector<double> out(m.s.size());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = k * (m.U[j] - w * m.V[j]);
        return out;
    }

    double loss(std::size_t i, double C) {
        auto& m = curves_[i];
        const double w = 1.0 + C / norm_;
        const double k = scale(i, C);
        for (std::size_t j = 0; j < m.s.size(); ++j) m.err[j] = k * (m.U[j] - w * m.V[j]) - m.target[j];
        return trapz_sq(m.s, m.err);
    }

    [[nodiscard]] const std::vector<double>& grid(std::size_t i) const { return curves_[i].s; }
    [[nodiscard]] std::size_t size() const { return curves_.size(); }

private:
    struct Curve {
        std::vector<double> s, U, V, target, err;
        double target_one{0.0}, U1{0.0}, V1{0.0};
    };
    const FitProblem& p_;
    double norm_;
    std::vector<Curve> curves_;
};

struct Point {
    double norm{0.0};
    double b{0.0};
    std::vector<double> C;
    double value{INFINITY};
};

Point profile(const FitProblem& p, const FitConfig& cfg, double norm, double b) {
    Model m(p, cfg, norm, b);
    Point out{norm, b, std::vector<double>(m.size(), 0.0), 0.0};
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (p.C_max == 0.0) {
            out.value += m.loss(i, 0.0);
            continue;
        }
        const auto r = scan_then_golden([&](double C) { return m.loss(i, C); }, 0.0, p.C_max, 10, 1e-10);
        out.C[i] = r.x;
        out.value += r.fx;
    }
    return out;
}

struct Descent {
    Point best;
    std::size_t evaluations{0};
    std::size_t cycles{0};
    bool converged{false};
};

Descent descend(const FitProblem& p, const FitConfig& cfg, double norm0, double b0, std::size_t cycles,
                std::size_t budget) {
    const std::array<double, 2> lo{p.norm_lo, p.b_lo};
    const std::array<double, 2> hi{p.norm_hi, p.b_hi};
    std::array<double, 2> span{hi[0] - lo[0], hi[1] - lo[1]};
    std::array<double, 2> w{0.25 * span[0], 0.25 * span[1]};

    Descent d;
    auto eval = [&](const std::array<double, 2>& x) {
        ++d.evaluations;
        return profile(p, cfg, x[0], x[1]);
    };
    std::array<double, 2> x{std::clamp(norm0, lo[0], hi[0]), std::clamp(b0, lo[1], hi[1])};
    d.best = eval(x);

    for (std::size_t c = 0; c < cycles && d.evaluations < budget; ++c) {
        const auto prev = x;
        for (std::size_t j = 0; j < 2; ++j) {
            const double a = std::max(lo[j], x[j] - w[j]);
            const double bb = std::min(hi[j], x[j] + w[j]);
            Point cand;
            auto f = [&](double v) {
                auto y = x;
                y[j] = v;
                auto pt = eval(y);
                const double val = pt.value;
                if (val < cand.value) cand = std::move(pt);
                return val;
            };
            (void)scan_then_golden(f, a, bb, 4, std::max(cfg.tol * span[j], 0.01 * w[j]));
            if (cand.value < d.best.value) {
                d.best = std::move(cand);
                x = {d.best.norm, d.best.b};
            }
        }
        // One step along the cycle's net displacement.
        const std::array<double, 2> step{x[0] - prev[0], x[1] - prev[1]};
        if (step[0] != 0.0 || step[1] != 0.0) {
            const std::array<double, 2> y{std::clamp(x[0] + step[0], lo[0], hi[0]),
                                          std::clamp(x[1] + step[1], lo[1], hi[1])};
            auto pt = eval(y);
            if (pt.value < d.best.value) {
                d.best = std::move(pt);
                x = y;
            }
        }
        double move = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            const double mj = std::abs(x[j] - prev[j]);
            move = std::max(move, mj / span[j]);
            w[j] = std::max({0.5 * w[j], 4.0 * mj, cfg.tol * span[j]});
        }
        d.cycles = c + 1;
        if (move <= cfg.tol) {
            d.converged = true;
            break;
        }
    }
    return d;
}

double curve_energy(const FitProblem& p) {
    double e = 0.0;
    for (const auto& c : p.curves) e += trapz_sq(c.s, c.mean);
    return e;
}

} // namespace

double objective(const FitParams& params, const FitProblem& problem, const FitConfig& config) {
    problem.validate();
    if (problem.curves.empty()) return 0.0;
    require(params.C.size() == problem.curves.size(), "objective: one C per curve");
    Model m(problem, config, params.norm, params.b);
    double v = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) v += m.loss(i, params.C[i]);
    return v;
}

std::vector<ImpactCurve> model_curves(const FitParams& params, const FitProblem& problem, const FitConfig& config) {
    problem.validate();
    require(params.C.size() == problem.curves.size(), "model_curves: one C per curve");
    Model m(problem, config, params.norm, params.b);
    std::vector<ImpactCurve> out;
    for (std::size_t i = 0; i < m.size(); ++i) out.push_back(make_curve(m.grid(i), m.curve(i, params.C[i])));
    return out;
}

FitResult fit(const FitProblem& problem, const FitConfig& config) {
    problem.validate();
    require(config.dt > 0.0 && config.starts >= 1, "fit: dt must be > 0 and starts >= 1");
    FitResult res;
    if (problem.curves.empty()) {
        res.norm = 0.5 * (problem.norm_lo + problem.norm_hi);
        res.b = 0.5 * (problem.b_lo + problem.b_hi);
        res.alpha = PowerLawKernel::with_norm(res.norm, res.b, problem.offset).alpha;
        res.converged = true;
        return res;
    }

    // Fixed starts on a grid over the box.
    std::vector<std::array<double, 2>> starts;
    const std::size_t cols = (config.starts + 1) / 2;
    for (std::size_t i = 0; i < config.starts; ++i) {
        const double u = (static_cast<double>(i % cols) + 0.5) / static_cast<double>(cols);
        const double v = config.starts == 1 ? 0.5 : (i < cols ? 0.3 : 0.7);
        starts.push_back({problem.norm_lo + u * (problem.norm_hi - problem.norm_lo),
                          problem.b_lo + v * (problem.b_hi - problem.b_lo)});
    }

    std::vector<Descent> coarse(starts.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < starts.size(); ++i) {
        try {
            coarse[i] = descend(problem, config, starts[i][0], starts[i][1], config.coarse_cycles, config.max_evaluations);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    std::size_t pick = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        used += coarse[i].evaluations;
        if (coarse[i].best.value < coarse[pick].best.value) pick = i;
    }
    const std::size_t left = config.max_evaluations > used ? config.max_evaluations - used : 0;
    const auto polish = descend(problem, config, coarse[pick].best.norm, coarse[pick].best.b, config.max_cycles, left);
    const Point& best = polish.best.value <= coarse[pick].best.value ? polish.best : coarse[pick].best;

    res.norm = best.norm;
    res.b = best.b;
    res.C = best.C;
    res.alpha = PowerLawKernel::with_norm(res.norm, res.b, problem.offset).alpha;
    Model m(problem, config, res.norm, res.b);
    for (std::size_t i = 0; i < m.size(); ++i) res.scale.push_back(m.scale(i, res.C[i]));
    res.objective = objective(FitParams{res.norm, res.b, res.C}, problem, config);
    const double e = curve_energy(problem);
    res.relative_objective = e > 0.0 ? res.objective / e : 0.0;
    res.evaluations = used + polish.evaluations;
    res.cycles = polish.cycles;
    res.converged = polish.converged;
    std::ostringstream msg;
    msg << "start " << pick << " of " << starts.size() << "; " << res.evaluations << " profile evaluations";
    if (!res.converged) msg << "; evaluation budget or cycle limit reached before convergence (best so far returned)";
    res.diagnostics = msg.str();
    return res;
}

} // namespace himpact
