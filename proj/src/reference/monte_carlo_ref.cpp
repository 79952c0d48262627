#include "himpact/error.hpp"
#include "himpact/hawkes_sim.hpp"
#include "../mc_moments.hpp"

namespace himpact::reference {

McCurve monte_carlo_impact(const HimSpec& him, std::size_t n_paths, std::span<const double> t_grid,
                           std::uint64_t seed, const MonteCarloOptions& options) {
    require(n_paths >= 1, "monte_carlo_impact: n_paths must be >= 1");
    const auto model = build_simulation_model(him, detail::grid_horizon(t_grid, options.horizon), options);
    const std::size_t n = t_grid.size();
    detail::Moments total(n), block(n);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const auto path = price_path(simulate(model.hawkes, model.exogenous, seed, p));
        for (std::size_t i = 0; i < n; ++i) {
            const double v = static_cast<double>(path.at(t_grid[i]));
            block.sum[i] += v;
            block.sumsq[i] += v * v;
        }
        if ((p + 1) % kMonteCarloBlock == 0 || p + 1 == n_paths) {
            for (std::size_t i = 0; i < n; ++i) {
                total.sum[i] += block.sum[i];
                total.sumsq[i] += block.sumsq[i];
                block.sum[i] = block.sumsq[i] = 0.0;
            }
        }
    }
    return detail::finish(t_grid, total, n_paths);
}

} // namespace himpact::reference
