#include "cli.hpp"

#include "himpact/error.hpp"
#include "himpact/model_fit.hpp"
#include "himpact/svg.hpp"

namespace himpact::cli {

namespace {

void read_problem(Params& p, FitProblem& problem, FitConfig& config) {
    const auto& list = p.raw("curves");
    if (!list.is_array()) fail("invalid_argument", p.where() + ".curves must be an array");
    json resolved = json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
        Params c(list[i], p.where() + ".curves[" + std::to_string(i) + "]", p.base());
        const auto path = c.path("path");
        const double duration = c.number("duration");
        const double t0 = c.number("t0", 0.0);
        c.finish();
        require(duration > 0.0, c.where() + ".duration must be > 0");
        problem.curves.push_back(io::read_curve(path, t0, duration));
        problem.durations.push_back(duration);
        resolved.push_back(c.resolved());
    }
    p.store("curves", resolved);
    problem.time_unit = p.number("time_unit", problem.time_unit);
    problem.offset = p.number("offset", problem.offset);

    auto bounds = p.child("bounds");
    const auto norm = bounds.numbers("norm", {problem.norm_lo, problem.norm_hi});
    const auto b = bounds.numbers("b", {problem.b_lo, problem.b_hi});
    problem.C_max = bounds.number("C_max", problem.C_max);
    if (norm.size() != 2 || b.size() != 2) fail("invalid_argument", p.where() + ".bounds: norm and b take [lo, hi]");
    problem.norm_lo = norm[0];
    problem.norm_hi = norm[1];
    problem.b_lo = b[0];
    problem.b_hi = b[1];
    p.adopt("bounds", bounds);

    auto opt = p.child("optimizer");
    config.starts = opt.count("starts", config.starts);
    config.coarse_cycles = opt.count("coarse_cycles", config.coarse_cycles);
    config.max_cycles = opt.count("max_cycles", config.max_cycles);
    config.max_evaluations = opt.count("max_evaluations", config.max_evaluations);
    config.tol = opt.number("tol", config.tol);
    p.adopt("optimizer", opt);
}

} // namespace

Outputs cmd_fit(Params& p, const Context& ctx) {
    FitProblem problem;
    FitConfig config;
    config.dt = ctx.dt;
    bool svg = true;
    if (p.has("problem")) {
        const auto path = p.path("problem");
        p.drop("problem");
        Params inner(io::parse_json(io::read_text(path), path.string()), "fit.problem", path.parent_path());
        read_problem(inner, problem, config);
        svg = inner.flag("svg", true);
        inner.finish();
        for (const auto& [key, value] : inner.resolved().items()) p.store(key, value);
    } else {
        read_problem(p, problem, config);
        svg = p.flag("svg", true);
    }
    p.finish();
    if (problem.curves.empty()) fail("insufficient_data", "fit: no curves");

    const auto result = fit(problem, config);
    const auto models = model_curves(FitParams{result.norm, result.b, result.C}, problem, config);

    Outputs out;
    out["fit_result.json"] = io::to_json(result).dump(2) + "\n";
    io::CsvWriter w({"curve", "s", "data", "model"});
    svg::Chart chart{"Model fit", "s", "eta", {}};
    for (std::size_t i = 0; i < problem.curves.size(); ++i) {
        const auto& c = problem.curves[i];
        for (std::size_t k = 0; k < models[i].s.size(); ++k) {
            w.row({std::to_string(i), io::num(c.s[k]), io::num(c.mean[k]), io::num(models[i].mean[k])});
        }
        chart.series.push_back({"data " + std::to_string(i), c.s, c.mean});
        chart.series.push_back({"model " + std::to_string(i), models[i].s, models[i].mean});
    }
    out["model_curves.csv"] = w.str();
    if (svg) out["fit.svg"] = svg::render(chart);
    return out;
}

} // namespace himpact::cli
