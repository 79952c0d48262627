#include "himpact/error.hpp"
#include "himpact/hawkes_sim.hpp"
#include "mc_moments.hpp"

#include <algorithm>
#include <cmath>

namespace himpact {

using detail::finish;
using detail::grid_horizon;
using detail::Moments;

HimSimulationModel build_simulation_model(const HimSpec& him, double horizon, const MonteCarloOptions& options) {
    him.validate();
    require(horizon > 0.0, "simulation horizon must be > 0");
    require(options.exogenous_dt > 0.0, "exogenous_dt must be > 0");

    HimSimulationModel model;
    model.hawkes = HawkesSpec::cross(him.mu, him.phi, horizon);
    model.hawkes.kernel_dt = options.kernel_dt;

    // Upward: f(r_t), piecewise constant.
    std::vector<double> up_t, up_v;
    for (const auto& seg : him.schedule.segments) {
        const double level = him.f(seg.rate);
        up_t.insert(up_t.end(), {seg.start, seg.start, seg.end, seg.end});
        up_v.insert(up_v.end(), {0.0, level, level, 0.0});
    }
    // Downward: (C/||phi||) int f(r_s) phi(t - s) ds, evaluated exactly at the
    // knots from the kernel primitive and linearly interpolated between them.
    const double norm = l1_norm(him.phi);
    const double weight = norm > 0.0 ? him.C / norm : 0.0;
    std::vector<double> knots;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / options.exogenous_dt));
    for (std::size_t k = 0; k <= steps; ++k) knots.push_back(std::min(horizon, options.exogenous_dt * static_cast<double>(k)));
    for (const auto& seg : him.schedule.segments) {
        knots.push_back(seg.start);
        knots.push_back(seg.end);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::vector<double> down_v(knots.size(), 0.0);
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double t = knots[k];
        double v = 0.0;
        for (const auto& seg : him.schedule.segments) {
            if (t <= seg.start) continue;
            const double upper = t - seg.start;
            const double lower = t - std::min(seg.end, t);
            v += him.f(seg.rate) * (kernel_integral(him.phi, upper) - kernel_integral(him.phi, lower));
        }
        down_v[k] = std::max(0.0, weight * v);
    }
    model.exogenous = {PiecewiseLinear(std::move(up_t), std::move(up_v)), PiecewiseLinear(std::move(knots), std::move(down_v))};
    return model;
}

namespace {

// Path values P(t_m) (or a count) at every grid time, from a sorted stream.
template <typename Step>
void sample_on_grid(const EventStream& stream, std::span<const double> t_grid, std::vector<double>& out, Step step) {
    // t_grid may be unsorted; walk it in sorted order.
    std::vector<std::size_t> order(t_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });
    double value = 0.0;
    std::size_t e = 0;
    for (std::size_t idx : order) {
        while (e < stream.events.size() && stream.events[e].time <= t_grid[idx]) value += step(stream.events[e++]);
        out[idx] = value;
    }
}

template <typename Step>
std::vector<Moments> run_blocks(const HawkesSimulator& sim, std::size_t n_paths, std::span<const double> t_grid,
                                std::uint64_t seed, Step step) {
    const std::size_t n_blocks = (n_paths + kMonteCarloBlock - 1) / kMonteCarloBlock;
    std::vector<Moments> blocks(n_blocks, Moments(t_grid.size()));
#pragma omp parallel
    {
        std::vector<double> values(t_grid.size());
#pragma omp for schedule(dynamic, 1)
        for (std::size_t b = 0; b < n_blocks; ++b) {
            auto& m = blocks[b];
            const std::size_t end = std::min(n_paths, (b + 1) * kMonteCarloBlock);
            for (std::size_t p = b * kMonteCarloBlock; p < end; ++p) {
                const auto stream = sim.run(seed, p);
                sample_on_grid(stream, t_grid, values, step);
                for (std::size_t i = 0; i < values.size(); ++i) {
                    m.sum[i] += values[i];
                    m.sumsq[i] += values[i] * values[i];
                }
            }
        }
    }
    return blocks;
}

Moments reduce(const std::vector<Moments>& blocks, std::size_t n) {
    Moments total(n);
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < n; ++i) {
            total.sum[i] += b.sum[i];
            total.sumsq[i] += b.sumsq[i];
        }
    }
    return total;
}

} // namespace

McCurve monte_carlo_impact(const HimSpec& him, std::size_t n_paths, std::span<const double> t_grid,
                           std::uint64_t seed, const MonteCarloOptions& options) {
    require(n_paths >= 1, "monte_carlo_impact: n_paths must be >= 1");
    const auto model = build_simulation_model(him, grid_horizon(t_grid, options.horizon), options);
    const HawkesSimulator sim(model.hawkes, model.exogenous);
    auto step = [](const Event& e) { return e.dim == 0 ? 1.0 : -1.0; };
    const auto blocks = run_blocks(sim, n_paths, t_grid, seed, step);
    return finish(t_grid, reduce(blocks, t_grid.size()), n_paths);
}

std::vector<McCurve> monte_carlo_counts(const HawkesSpec& spec, std::span<const PiecewiseLinear> exogenous,
                                        std::size_t n_paths, std::span<const double> t_grid, std::uint64_t seed) {
    require(n_paths >= 1, "monte_carlo_counts: n_paths must be >= 1");
    const HawkesSimulator sim(spec, std::vector<PiecewiseLinear>(exogenous.begin(), exogenous.end()));
    std::vector<McCurve> out;
    // One pass per dimension keeps the reduction simple; streams are identical across passes.
    for (std::size_t d = 0; d < spec.dim; ++d) {
        auto step = [d](const Event& e) { return e.dim == d ? 1.0 : 0.0; };
        const auto blocks = run_blocks(sim, n_paths, t_grid, seed, step);
        out.push_back(finish(t_grid, reduce(blocks, t_grid.size()), n_paths));
    }
    return out;
}

} // namespace himpact
