#include "cli.hpp"

#include "himpact/error.hpp"
#include "himpact/impact_estimation.hpp"
#include "himpact/svg.hpp"

namespace himpact::cli {

namespace {

IngestionFilter read_filter(Params& p) {
    if (!p.has("filter")) {
        p.store("filter", "none");
        return {};
    }
    const auto& raw = p.raw("filter");
    IngestionFilter f;
    json resolved = json::object();
    if (raw.is_string()) {
        const auto name = raw.get<std::string>();
        if (name == "none") {
            p.store("filter", "none");
            return f;
        }
        if (name != "default") fail("invalid_argument", "estimate.filter must be 'none', 'default' or an object");
        f = default_filter();
    } else {
        io::reject_unknown(raw, {"min_duration", "r_min", "r_max", "R_min", "R_max", "closing_time", "min_child_orders"},
                           "estimate.filter");
        const auto opt = [&](const char* key) -> std::optional<double> {
            if (!raw.contains(key)) return std::nullopt;
            if (!raw[key].is_number()) fail("invalid_argument", std::string("estimate.filter.") + key + " must be a number");
            return raw[key].get<double>();
        };
        f.min_duration = opt("min_duration");
        f.r_min = opt("r_min");
        f.r_max = opt("r_max");
        f.R_min = opt("R_min");
        f.R_max = opt("R_max");
        f.closing_time = opt("closing_time");
        if (auto c = opt("min_child_orders")) f.min_child_orders = static_cast<std::size_t>(*c);
    }
    const auto put = [&](const char* key, const auto& v) {
        if (v) resolved[key] = *v;
    };
    put("min_duration", f.min_duration);
    put("r_min", f.r_min);
    put("r_max", f.r_max);
    put("R_min", f.R_min);
    put("R_max", f.R_max);
    put("closing_time", f.closing_time);
    put("min_child_orders", f.min_child_orders);
    p.store("filter", resolved);
    return f;
}

std::vector<double> column(const Dataset& data, const Extractor& x) {
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& r : data.records) out.push_back(x(r));
    return out;
}

} // namespace

Outputs cmd_estimate(Params& p, const Context& ctx) {
    const auto metaorders_path = p.path("metaorders");
    const auto prices_dir = p.path("prices_dir");
    const IngestionFilter filter = read_filter(p);
    AverageOptions avg;
    avg.transform = parse_transform(p.text("transform", "relative"));
    avg.points_per_unit = p.count("points_per_unit", avg.points_per_unit);
    avg.s_max = p.number("s_max", avg.s_max);
    avg.band_levels = p.numbers("band_levels", avg.band_levels);
    const double fit_lo = p.number("fit_s_lo", 0.05);
    const double fit_hi = p.number("fit_s_hi", 1.0);
    const bool svg = p.flag("svg", true);

    std::optional<Params> reg, trace, boot, slices, antic, decay;
    std::vector<std::string> losses, reg_vars;
    std::string trace_var;
    std::size_t trace_k = 10, boot_draws = 0, slice_k = 10, i_max = 5;
    double boot_frac = 0.8, R0 = 0.0, T0 = 0.0, threshold = 0.02, decay_lo = 1.1, decay_hi = 2.0;
    std::string slice_var;
    if (p.has("regression")) {
        reg = p.child("regression");
        losses = reg->texts("losses", {"L1", "L2", "loglog"});
        reg_vars = reg->texts("variables", {"R"});
        for (const auto& l : losses) (void)parse_loss(l);
        for (const auto& v : reg_vars) (void)variable(v);
        require(!losses.empty() && !reg_vars.empty(), "estimate.regression: losses and variables must be nonempty");
        p.adopt("regression", *reg);
    }
    if (p.has("trace")) {
        trace = p.child("trace");
        trace_var = trace->text("variable", "T");
        trace_k = trace->count("quantiles", trace_k);
        (void)variable(trace_var);
        p.adopt("trace", *trace);
        if (!reg) fail("invalid_argument", "estimate.trace needs a regression block");
    }
    if (p.has("bootstrap")) {
        boot = p.child("bootstrap");
        boot_draws = boot->count("draws", 500);
        boot_frac = boot->number("frac", boot_frac);
        p.adopt("bootstrap", *boot);
    }
    if (p.has("slices")) {
        slices = p.child("slices");
        slice_var = slices->text("variable", "R");
        slice_k = slices->count("quantiles", slice_k);
        (void)variable(slice_var);
        p.adopt("slices", *slices);
    }
    if (p.has("anticipation")) {
        antic = p.child("anticipation");
        R0 = antic->number("R0");
        T0 = antic->number("T0");
        i_max = antic->count("i_max", i_max);
        threshold = antic->number("threshold", threshold);
        p.adopt("anticipation", *antic);
    }
    if (p.has("decay")) {
        decay = p.child("decay");
        decay_lo = decay->number("s_lo", decay_lo);
        decay_hi = decay->number("s_hi", decay_hi);
        p.adopt("decay", *decay);
    }
    p.finish();

    // Ingest.
    const auto all = io::read_metaorders(metaorders_path);
    if (all.empty()) fail("insufficient_data", metaorders_path.string() + ": no metaorder records");
    const auto report = apply_filter(all, filter);
    if (report.kept.empty()) fail("insufficient_data", "no records left after filtering");
    Dataset data;
    for (std::size_t i : report.kept) {
        const auto& rec = all[i];
        data.records.push_back(rec);
        data.series.push_back(io::read_price_series(prices_dir / (rec.instrument + "_" + rec.date + ".csv")));
    }
    data.validate();

    Outputs out;
    json summary{{"records", all.size()},
                 {"kept", data.size()},
                 {"dropped",
                  {{"duration", report.dropped_duration},
                   {"rate", report.dropped_rate},
                   {"participation", report.dropped_participation},
                   {"close", report.dropped_close},
                   {"child_orders", report.dropped_child_orders}}}};

    const auto curve = rescaled_average(data, avg);
    out["curve.csv"] = io::impact_curve_csv(curve);
    summary["skipped"] = curve.skipped;
    const auto tr = transient_fit(curve, fit_lo, fit_hi);
    summary["transient"] = {{"exponent", tr.exponent}, {"prefactor", tr.prefactor}, {"r2", tr.r2}, {"points", tr.points}};
    summary["eta_1"] = curve.value_at_one();
    if (svg) {
        svg::Chart chart{"Average impact", "s", "eta", {{"mean", curve.s, curve.mean}}};
        for (std::size_t j = 0; j < curve.bands.size(); ++j) {
            chart.series.push_back({"q" + io::num(100.0 * curve.band_levels[j]), curve.s, curve.bands[j]});
        }
        out["curve.svg"] = svg::render(chart);
    }

    if (reg) {
        std::vector<Extractor> xs;
        for (const auto& v : reg_vars) xs.push_back(variable(v));
        std::vector<std::string> header{"loss", "a"};
        for (const auto& v : reg_vars) header.push_back("gamma_" + v);
        for (const char* h : {"loss_value", "n", "dropped", "converged"}) header.push_back(h);
        io::CsvWriter w(header);
        std::optional<RegressionResult> l2;
        for (const auto& name : losses) {
            const auto loss = parse_loss(name);
            auto r = direct_regression(data, xs, loss, {}, avg.transform);
            std::vector<std::string> row{loss_name(loss), io::num(r.a)};
            for (double g : r.gamma) row.push_back(io::num(g));
            row.push_back(io::num(r.loss_value));
            row.push_back(std::to_string(r.n));
            row.push_back(std::to_string(r.dropped));
            row.push_back(r.converged ? "true" : "false");
            w.row(row);
            if (loss == Loss::L2 || !l2) l2 = std::move(r);
        }
        out["regression.csv"] = w.str();

        if (trace) {
            const auto y = column(data, variable(trace_var));
            const auto t = residual_trace(l2->residuals, y, trace_k);
            io::CsvWriter tw({"quantile", "mean_" + trace_var, "residual_mean", "residual_stderr", "count"});
            for (std::size_t k = 0; k < t.y_mean.size(); ++k) {
                tw.row({std::to_string(k), io::num(t.y_mean[k]), io::num(t.residual_mean[k]), io::num(t.residual_stderr[k]),
                        std::to_string(t.count[k])});
            }
            out["trace.csv"] = tw.str();
            summary["trace"] = {{"variable", trace_var}, {"loss", loss_name(l2->loss)}, {"slope", t.slope}};
        }
    }

    if (boot) {
        BootstrapOptions bo;
        bo.n_draws = boot_draws;
        bo.frac = boot_frac;
        bo.s_lo = fit_lo;
        bo.s_hi = fit_hi;
        bo.average = avg;
        const auto b = bootstrap_exponent(data, ctx.seed, bo);
        io::CsvWriter bw({"draw", "exponent"});
        for (std::size_t i = 0; i < b.draws.size(); ++i) bw.row({std::to_string(i), io::num(b.draws[i])});
        out["bootstrap.csv"] = bw.str();
        summary["bootstrap"] = {{"mean", b.mean}, {"q05", b.q05}, {"q25", b.q25}, {"q50", b.q50}, {"q75", b.q75}, {"q95", b.q95}};
    }

    if (slices) {
        const auto q = quantile_slices(data, variable(slice_var), slice_k, avg.transform);
        io::CsvWriter sw({"quantile", "lower", "upper", "impact", "count"});
        for (std::size_t k = 0; k < q.impact.size(); ++k) {
            sw.row({std::to_string(k), io::num(q.buckets.lower[k]), io::num(q.buckets.upper[k]), io::num(q.impact[k]),
                    std::to_string(q.count[k])});
        }
        out["slices.csv"] = sw.str();
    }

    if (antic) {
        const auto a = anticipation_groups(data, R0, T0, i_max, avg, threshold);
        io::CsvWriter aw({"group", "next", "sup_distance", "relative", "flagged"});
        for (const auto& pr : a.pairs) {
            aw.row({std::to_string(pr.i), std::to_string(pr.j), io::num(pr.sup_distance), io::num(pr.relative),
                    pr.flagged ? "true" : "false"});
        }
        out["anticipation.csv"] = aw.str();
        json groups = json::array();
        for (const auto& g : a.groups) groups.push_back({{"index", g.index}, {"members", g.members.size()}});
        summary["anticipation"] = {{"groups", groups}, {"notes", a.notes}};
    }

    if (decay) {
        const auto d = decay_loglog(curve);
        io::CsvWriter dw({"s", "log_lag", "log_diff"});
        for (std::size_t k = 0; k < d.s.size(); ++k) dw.row(std::vector<double>{d.s[k], d.log_lag[k], d.log_diff[k]});
        out["decay.csv"] = dw.str();
        summary["decay"] = {{"dropped", d.dropped}, {"slope", d.empty() ? 0.0 : d.slope(decay_lo, decay_hi)}};
    }

    out["estimate.json"] = summary.dump(2) + "\n";
    return out;
}

} // namespace himpact::cli
