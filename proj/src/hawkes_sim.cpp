#include "himpact/hawkes_sim.hpp"

#include "himpact/error.hpp"
#include "himpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace himpact {

// ---------------------------------------------------------------------------
// PiecewiseLinear

PiecewiseLinear::PiecewiseLinear(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    require(times_.size() == values_.size(), "PiecewiseLinear: times/values size mismatch");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        require(std::isfinite(times_[i]) && std::isfinite(values_[i]), "PiecewiseLinear: non-finite knot");
        if (i > 0) require(times_[i] >= times_[i - 1], "PiecewiseLinear: knot times must be nondecreasing");
    }
}

PiecewiseLinear PiecewiseLinear::constant(double value) { return PiecewiseLinear({0.0}, {value}); }

PiecewiseLinear PiecewiseLinear::box(double start, double end, double value) {
    require(end >= start, "PiecewiseLinear::box: end < start");
    return PiecewiseLinear({start, start, end, end}, {0.0, value, value, 0.0});
}

double PiecewiseLinear::operator()(double t) const {
    if (times_.empty()) return 0.0;
    if (t < times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double t0 = times_[i], t1 = times_[i + 1];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * values_[i] + w * values_[i + 1];
}

double PiecewiseLinear::integral(double a, double b) const {
    if (times_.empty() || b <= a) return 0.0;
    // Primitive relative to the first knot.
    auto primitive = [this](double x) {
        const double front = times_.front();
        if (x <= front) return (x - front) * values_.front();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
            const double t0 = times_[i], t1 = times_[i + 1];
            if (x <= t0) return acc;
            const double hi = std::min(x, t1);
            if (t1 > t0) {
                const double vhi = values_[i] + (values_[i + 1] - values_[i]) * (hi - t0) / (t1 - t0);
                acc += 0.5 * (hi - t0) * (values_[i] + vhi);
            }
            if (x <= t1) return acc;
        }
        return acc + (x - times_.back()) * values_.back();
    };
    return primitive(b) - primitive(a);
}

double PiecewiseLinear::next_knot(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return it == times_.end() ? std::numeric_limits<double>::infinity() : *it;
}

double PiecewiseLinear::max_on(double a, double b) const {
    if (times_.empty()) return 0.0;
    double m = std::max((*this)(a), (*this)(b));
    const auto lo = std::lower_bound(times_.begin(), times_.end(), a);
    const auto hi = std::upper_bound(times_.begin(), times_.end(), b);
    for (auto it = lo; it != hi; ++it) m = std::max(m, values_[static_cast<std::size_t>(it - times_.begin())]);
    return m;
}

double PiecewiseLinear::min_value() const {
    if (values_.empty()) return 0.0;
    return *std::min_element(values_.begin(), values_.end());
}

// ---------------------------------------------------------------------------
// HawkesSpec

std::vector<double> HawkesSpec::norm_matrix() const {
    std::vector<double> k(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim * dim; ++i) {
        if (kernels[i]) k[i] = l1_norm(*kernels[i]);
    }
    return k;
}

void HawkesSpec::validate() const {
    require(dim >= 1, "HawkesSpec: dim must be >= 1");
    require(mu.size() == dim, "HawkesSpec: need one baseline per dimension");
    require(kernels.size() == dim * dim, "HawkesSpec: kernel matrix must be dim x dim");
    require(std::isfinite(horizon) && horizon > 0.0, "HawkesSpec: horizon must be > 0");
    require(kernel_dt > 0.0, "HawkesSpec: kernel_dt must be > 0");
    for (const auto& m : mu) require(m.min_value() >= 0.0, "HawkesSpec: baseline intensity must be >= 0");
    for (const auto& k : kernels) {
        if (k) himpact::validate(*k);
    }
    const double rho = spectral_radius(norm_matrix(), dim);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "HawkesSpec: spectral radius " << rho << " >= 1 (non-stationary)";
        fail("not_stationary", msg.str());
    }
}

HawkesSpec HawkesSpec::cross(double mu, const Kernel& phi, double horizon) {
    HawkesSpec spec;
    spec.dim = 2;
    spec.mu = {PiecewiseLinear::constant(mu), PiecewiseLinear::constant(mu)};
    spec.kernels = {std::nullopt, phi, phi, std::nullopt};
    spec.horizon = horizon;
    return spec;
}

std::size_t EventStream::count(std::size_t dim, double until) const {
    std::size_t n = 0;
    for (const auto& e : events) {
        if (e.time > until) break;
        if (e.dim == dim) ++n;
    }
    return n;
}

long PricePath::at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 0;
    return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

// ---------------------------------------------------------------------------
// Thinning

HawkesSimulator::HawkesSimulator(HawkesSpec spec, std::vector<PiecewiseLinear> exogenous)
    : spec_(std::move(spec)), exogenous_(std::move(exogenous)) {
    spec_.validate();
    require(exogenous_.empty() || exogenous_.size() == spec_.dim, "simulate: need one exogenous intensity per dimension");
    for (const auto& e : exogenous_) {
        if (e.min_value() < 0.0) fail("invalid_argument", "simulate: exogenous intensity must be >= 0");
    }
    const std::size_t d = spec_.dim;
    kernels_.resize(d * d);
    for (std::size_t i = 0; i < d * d; ++i) {
        const auto& k = spec_.kernels[i];
        if (!k || l1_norm(*k) == 0.0) continue;
        auto& ek = kernels_[i];
        ek.active = true;
        ek.analytic = *k;
        if (const auto* e = std::get_if<ExponentialKernel>(&*k)) {
            ek.exponential = true;
            ek.alpha = e->alpha;
            ek.beta = e->beta;
        } else {
            ek.table = sample_kernel(*k, spec_.kernel_dt, std::max(spec_.horizon, spec_.kernel_dt));
        }
    }
    const auto blocks = static_cast<std::size_t>(std::clamp(std::ceil(spec_.horizon / 0.5), 64.0, 1e6));
    block_ = spec_.horizon / static_cast<double>(blocks);
    envelope_.assign(blocks * d, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double lo = block_ * static_cast<double>(b);
        const double hi = b + 1 == blocks ? spec_.horizon : block_ * static_cast<double>(b + 1);
        for (std::size_t i = 0; i < d; ++i) {
            double m = spec_.mu[i].max_on(lo, hi);
            if (!exogenous_.empty()) m += exogenous_[i].max_on(lo, hi);
            envelope_[b * d + i] = m;
        }
    }
}

EventStream HawkesSimulator::run(std::uint64_t seed, std::uint64_t path_index, SimulationStats* stats) const {
    const std::size_t d = spec_.dim;
    Rng rng(seed, path_index);
    std::vector<double> state(d * d, 0.0);
    std::vector<std::vector<double>> history(d);
    double now = 0.0;

    // Excitation of dimension i at time t >= now.
    auto excitation = [&](std::size_t i, double t) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const auto& k = kernels_[i * d + j];
            if (!k.active) continue;
            if (k.exponential) {
                sum += state[i * d + j] * std::exp(-k.beta * (t - now));
            } else {
                for (double te : history[j]) sum += k.table.at(t - te);
            }
        }
        return sum;
    };
    auto intensity = [&](std::size_t i, double t) {
        double v = spec_.mu[i](t) + excitation(i, t);
        if (!exogenous_.empty()) v += exogenous_[i](t);
        return v;
    };
    auto add_event = [&](double t, std::size_t dim) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const auto& k = kernels_[i * d + j];
                if (!k.exponential) continue;
                auto& s = state[i * d + j];
                s *= std::exp(-k.beta * (t - now));
                if (j == dim) s += k.alpha;
            }
        }
        now = t;
        history[dim].push_back(t);
    };

    EventStream out;
    out.horizon = spec_.horizon;
    double t = 0.0;
    std::vector<double> lambda(d);
    const std::size_t blocks = envelope_.size() / d;
    std::size_t block = 0;
    while (t < spec_.horizon && block < blocks) {
        const double seg_end = block + 1 == blocks ? spec_.horizon : block_ * static_cast<double>(block + 1);
        double bound = 0.0;
        for (std::size_t i = 0; i < d; ++i) bound += envelope_[block * d + i] + excitation(i, t);
        if (bound <= 0.0) {
            t = seg_end;
            ++block;
            continue;
        }
        const double candidate = t + rng.exponential(bound);
        if (stats) ++stats->proposals;
        if (candidate >= seg_end) {
            t = seg_end;
            ++block;
            continue;
        }
        t = candidate;
        double total = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            lambda[i] = intensity(i, t);
            total += lambda[i];
        }
        const double u = rng.uniform() * bound;
        if (u >= total) continue;
        std::size_t dim = 0;
        double acc = lambda[0];
        while (u >= acc && dim + 1 < d) acc += lambda[++dim];
        add_event(t, dim);
        out.events.push_back({t, dim});
        if (stats) ++stats->accepted;
    }
    if (stats) {
        for (std::size_t i = 0; i < d * d; ++i) {
            if (!kernels_[i].active || kernels_[i].exponential) continue;
            for (double te : history[i % d]) {
                stats->truncated_mass_bound += tail_beyond(*kernels_[i].analytic, spec_.horizon - te);
            }
        }
    }
    return out;
}

EventStream simulate(const HawkesSpec& spec, std::span<const PiecewiseLinear> exogenous, std::uint64_t seed,
                     std::uint64_t path_index, SimulationStats* stats) {
    const HawkesSimulator sim(spec, std::vector<PiecewiseLinear>(exogenous.begin(), exogenous.end()));
    return sim.run(seed, path_index, stats);
}

// ---------------------------------------------------------------------------
// Expected counts

std::vector<std::vector<double>> expected_counts(const HawkesSpec& spec, std::span<const PiecewiseLinear> exogenous,
                                                 std::span<const double> t_grid,
                                                 const ExpectedCountsOptions& options) {
    spec.validate();
    require(exogenous.empty() || exogenous.size() == spec.dim, "expected_counts: need one exogenous intensity per dimension");
    require(options.dt > 0.0, "expected_counts: dt must be > 0");
    const std::size_t d = spec.dim;
    double t_max = 0.0;
    for (double t : t_grid) {
        require(t >= 0.0, "expected_counts: times must be >= 0");
        t_max = std::max(t_max, t);
    }
    const auto n = static_cast<std::size_t>(std::ceil(t_max / options.dt - 1e-9)) + 2;
    const double horizon = options.dt * static_cast<double>(n - 1);

    std::vector<SampledFunction> h;
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> v(n, 0.0);
        for (std::size_t k = 1; k < n; ++k) {
            const double a = options.dt * static_cast<double>(k - 1), b = options.dt * static_cast<double>(k);
            v[k] = v[k - 1] + spec.mu[i].integral(a, b) + (exogenous.empty() ? 0.0 : exogenous[i].integral(a, b));
        }
        h.emplace_back(options.dt, std::move(v));
    }

    FunctionMatrix phi(d, options.dt, n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (const auto& k = spec.kernel(i, j)) phi.at(i, j) = sample_kernel(*k, options.dt, horizon);
        }
    }
    const auto psi = psi_series(phi, options.series).psi;

    std::vector<std::vector<double>> out(d, std::vector<double>(t_grid.size()));
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> e(h[i].values().begin(), h[i].values().end());
        for (std::size_t j = 0; j < d; ++j) {
            const auto c = convolve(psi.at(i, j), h[j]);
            for (std::size_t k = 0; k < c.size(); ++k) e[k] += c[k];
        }
        const SampledFunction curve(options.dt, std::move(e));
        for (std::size_t m = 0; m < t_grid.size(); ++m) out[i][m] = curve.at(t_grid[m]);
    }
    return out;
}

PricePath price_path(const EventStream& stream, std::size_t up_dim, std::size_t down_dim) {
    PricePath path;
    long p = 0;
    for (const auto& e : stream.events) {
        if (e.dim == up_dim) {
            ++p;
        } else if (e.dim == down_dim) {
            --p;
        } else {
            continue;
        }
        path.jump_times.push_back(e.time);
        path.values.push_back(p);
    }
    return path;
}

} // namespace himpact
