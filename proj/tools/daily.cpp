#include "cli.hpp"

#include "himpact/daily_analysis.hpp"
#include "himpact/error.hpp"
#include "himpact/svg.hpp"

namespace himpact::cli {

Outputs cmd_daily(Params& p, const Context& ctx) {
    const auto closes_path = p.path("closes");
    const auto index_path = p.path("index_closes");
    const auto map_path = p.path("index_map");
    const auto meta_path = p.path("metaorders");
    ProfileOptions prof;
    prof.n_boot = p.count("n_boot", 1000);
    prof.level = p.number("level", prof.level);
    prof.seed = ctx.seed;
    const double exponent = p.number("exponent", 0.5);
    std::optional<double> a_fixed;
    if (p.has("a") && p.raw("a").is_number()) {
        a_fixed = p.number("a");
    } else {
        if (p.text("a", "fit") != "fit") fail("invalid_argument", "daily.a must be a number or \"fit\"");
    }
    auto ac = p.child("autocorr");
    const std::size_t max_lag = ac.count("max_lag", 20);
    const std::size_t ac_boot = ac.count("n_boot", 200);
    p.adopt("autocorr", ac);
    const bool svg = p.flag("svg", true);
    p.finish();
    require(prof.level > 0.0 && prof.level < 1.0, "daily.level must be in (0, 1)");

    const auto metaorders = io::read_daily_metaorders(meta_path);
    if (metaorders.empty()) fail("insufficient_data", meta_path.string() + ": no metaorder records");
    const auto closes = io::read_closes(closes_path, "instrument");
    const auto index_closes = io::read_closes(index_path, "index");
    const auto index_of = io::read_index_map(map_path);
    const auto data = assemble_daily(metaorders, closes, index_closes, index_of);
    if (data.records.empty()) fail("insufficient_data", "daily: no metaorder has full close coverage");

    Outputs out;
    io::CsvWriter bw({"id", "instrument", "date", "side", "R", "beta"});
    for (const auto& r : data.records) {
        const auto capm = capm_decompose(r);
        bw.row({r.id, r.instrument, r.date, std::to_string(r.side), io::num(r.R), io::num(capm.beta)});
    }
    out["beta.csv"] = bw.str();

    const auto raw = postexec_profile(data.records, prof);
    const auto sq = fit_sqrt_model(data.records, exponent);
    auto notes = data.notes;
    double a = a_fixed.value_or(sq.a);
    if (a < 0.0) {
        notes.push_back("fitted a = " + io::num(a) + " < 0; debiasing with a = 0");
        a = 0.0;
    }
    const auto debiased = debias_profiles(data.records, data.followups, a, exponent, prof);
    out["profile.csv"] = io::profile_csv(raw);
    out["profile_debiased.csv"] = io::profile_csv(debiased);
    out["sqrt_fit.json"] = json{{"a", sq.a}, {"exponent", sq.exponent}, {"stderr", sq.stderr_}, {"n", sq.n},
                                {"a_used", a}}.dump(2) + "\n";

    if (max_lag > 0) {
        const auto part = daily_participation(metaorders, closes);
        std::vector<std::vector<double>> series;
        for (const auto& [name, s] : part) series.push_back(s);
        out["autocorr.csv"] = io::autocorr_csv(participation_autocorr(series, max_lag, ac_boot, ctx.seed));
    }

    out["daily.json"] = json{{"metaorders", metaorders.size()}, {"records", data.records.size()}, {"notes", notes}}
                            .dump(2) + "\n";
    if (svg) {
        std::vector<double> day(raw.day.begin(), raw.day.end());
        svg::Chart chart{"Post-execution profile", "days after execution", "bp",
                         {{"idiosyncratic", day, raw.idiosyncratic},
                          {"systematic", day, raw.systematic},
                          {"debiased", day, debiased.idiosyncratic}}};
        out["profile.svg"] = svg::render(chart);
    }
    return out;
}

} // namespace himpact::cli
