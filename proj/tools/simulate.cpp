#include "cli.hpp"

#include "himpact/error.hpp"
#include "himpact/hawkes_sim.hpp"
#include "himpact/svg.hpp"

#include <cmath>

namespace himpact::cli {

namespace {

struct ExportOptions {
    std::size_t records{0};
    double p0{100.0};
    double tick{0.01};
    double t0{36000.0};
    double participation{0.1};
    double daily_volume{1e6};
    std::string date;
};

/// One record per simulated path: side alternates, the sell records see the
/// mirrored path, daily volume spread over [0.5, 1.5] x daily_volume.
void export_dataset(const HimSpec& spec, const HimSimulationModel& model, const ExportOptions& ex, std::uint64_t seed,
                    Outputs& out) {
    const HawkesSimulator sim(model.hawkes, model.exogenous);
    const double T = spec.duration();
    const double shift = ex.t0 - spec.t0();
    std::vector<MetaorderRecord> records;
    for (std::size_t k = 0; k < ex.records; ++k) {
        MetaorderRecord m;
        m.id = "sim" + pad_index(k, ex.records);
        m.instrument = "SIM" + pad_index(k, ex.records);
        m.date = ex.date;
        m.t0 = ex.t0;
        m.T = T;
        m.side = k % 2 == 0 ? 1 : -1;
        m.V = ex.daily_volume * (0.5 + (static_cast<double>(k) + 0.5) / static_cast<double>(ex.records));
        m.vbar = ex.daily_volume * T / 30600.0;
        m.v = ex.participation * m.vbar;
        m.sigma = 0.02;
        m.psi = ex.tick / ex.p0;

        const auto path = price_path(sim.run(seed, k));
        PriceSeries series;
        series.time.push_back(shift);
        series.price.push_back(ex.p0);
        for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
            const double t = shift + path.jump_times[i];
            const double p = ex.p0 + m.side * ex.tick * static_cast<double>(path.values[i]);
            if (t == series.time.back()) {
                series.price.back() = p;
            } else {
                series.time.push_back(t);
                series.price.push_back(p);
            }
        }
        out["prices/" + m.instrument + "_" + m.date + ".csv"] = io::price_series_csv(series);
        records.push_back(std::move(m));
    }
    out["metaorders.csv"] = io::metaorders_csv(records);
}

} // namespace

Outputs cmd_simulate(Params& p, const Context& ctx) {
    const HimSpec spec = read_spec(p);
    const std::size_t n_paths = p.count("n_paths", 1000);
    const double horizon = p.number("horizon", spec.t0() + 4.0 * spec.duration());
    const std::size_t points = p.count("points", 201);
    const double kernel_dt = p.number("kernel_dt", 1e-3);
    const bool svg = p.flag("svg", true);

    ExportOptions ex;
    if (p.has("export")) {
        auto e = p.child("export");
        ex.records = e.count("records", 100);
        ex.p0 = e.number("p0", ex.p0);
        ex.tick = e.number("tick", ex.tick);
        ex.t0 = e.number("t0", ex.t0);
        ex.participation = e.number("participation", ex.participation);
        ex.daily_volume = e.number("daily_volume", ex.daily_volume);
        ex.date = e.text("date", "2024-01-02");
        p.adopt("export", e);
        require(ex.p0 > 0.0 && ex.tick > 0.0, "simulate.export: p0 and tick must be > 0");
        require(ex.participation > 0.0 && ex.participation <= 1.0, "simulate.export: participation must be in (0, 1]");
        require(ex.daily_volume > 0.0, "simulate.export: daily_volume must be > 0");
    }
    p.finish();

    require(n_paths > 0, "simulate: n_paths must be > 0");
    require(points >= 2, "simulate: points must be >= 2");
    require(horizon > 0.0, "simulate: horizon must be > 0");

    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = horizon * static_cast<double>(i) / static_cast<double>(points - 1);

    MonteCarloOptions mc;
    mc.horizon = horizon;
    mc.exogenous_dt = ctx.dt;
    mc.kernel_dt = kernel_dt;
    const auto model = build_simulation_model(spec, horizon, mc);
    const auto curve = monte_carlo_impact(spec, n_paths, grid, ctx.seed, mc);

    Outputs out;
    const auto sample = simulate(model.hawkes, model.exogenous, ctx.seed, 0);
    out["events.csv"] = io::events_csv(sample);
    out["price_path.csv"] = io::price_path_csv(price_path(sample));
    out["mc_curve.csv"] = io::mc_curve_csv(curve);
    if (ex.records > 0) export_dataset(spec, model, ex, ctx.seed, out);
    if (svg) {
        svg::Chart chart{"Monte Carlo impact", "t (s)", "mean P_t", {{"mean", curve.t, curve.mean}}};
        std::vector<double> lo(curve.t.size()), hi(curve.t.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            lo[i] = curve.mean[i] - 2.0 * curve.stderr_[i];
            hi[i] = curve.mean[i] + 2.0 * curve.stderr_[i];
        }
        chart.series.push_back({"-2 se", curve.t, lo});
        chart.series.push_back({"+2 se", curve.t, hi});
        out["mc_curve.svg"] = svg::render(chart);
    }
    return out;
}

} // namespace himpact::cli
