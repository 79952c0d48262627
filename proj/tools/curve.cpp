#include "cli.hpp"

#include "himpact/error.hpp"
#include "himpact/him_model.hpp"
#include "himpact/svg.hpp"

namespace himpact::cli {

Outputs cmd_curve(Params& p, const Context& ctx) {
    std::vector<HimSpec> specs;
    if (p.has("specs")) {
        if (p.has("spec") || p.has("spec_path")) fail("invalid_argument", "curve: give specs or spec/spec_path, not both");
        const auto& list = p.raw("specs");
        if (!list.is_array() || list.empty()) fail("invalid_argument", "curve.specs must be a nonempty array");
        json resolved = json::array();
        for (const auto& j : list) {
            specs.push_back(io::him_spec_from_json(j));
            resolved.push_back(io::to_json(specs.back()));
        }
        p.store("specs", resolved);
    } else {
        specs.push_back(read_spec(p));
    }
    const double s_max = p.number("s_max", 4.0);
    const std::size_t ppu = p.count("points_per_unit", 100);
    const double kernel_horizon = p.number("kernel_horizon", 0.0);
    const std::string method = p.text("method", "resolvent");
    const bool svg = p.flag("svg", true);
    p.finish();

    require(s_max > 0.0, "curve: s_max must be > 0");
    require(ppu > 0, "curve: points_per_unit must be > 0");
    if (method != "resolvent" && method != "series") fail("invalid_argument", "curve.method must be resolvent or series");

    CurveOptions opt;
    opt.dt = ctx.dt;
    opt.horizon = kernel_horizon;
    opt.method = method == "series" ? KappaMethod::series : KappaMethod::resolvent;

    Outputs out;
    svg::Chart chart{"Impact curves", "t (s)", "eta", {}};
    json summary = json::array();
    const auto s_grid = rescaled_grid(ppu, s_max);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        std::vector<double> t(s_grid.size());
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = spec.t0() + s_grid[k] * spec.duration();
        const auto curve = impact_curve_analytic(spec, t, opt);
        const std::string name = specs.size() == 1 ? "curve.csv" : "curve_" + pad_index(i, specs.size()) + ".csv";
        out[name] = io::analytic_curve_csv(curve);
        chart.series.push_back({"C=" + io::num(spec.C), curve.t, curve.eta});

        json s{{"file", name},
               {"t0", spec.t0()},
               {"duration", spec.duration()},
               {"final", curve.eta.back()},
               {"grid_horizon", curve.grid_horizon},
               {"truncation_estimate", curve.truncation_estimate},
               {"warnings", curve.warnings}};
        if (spec.schedule.is_constant()) s["permanent_impact"] = permanent_impact(spec);
        summary.push_back(s);
    }
    out["curves.json"] = summary.dump(2) + "\n";
    if (svg) out["curves.svg"] = svg::render(chart);
    return out;
}

} // namespace himpact::cli
