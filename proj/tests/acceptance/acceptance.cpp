// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Usage: acceptance [criterion numbers...]  (default: all)

#include "himpact/daily_analysis.hpp"
#include "himpact/hawkes_sim.hpp"
#include "himpact/him_model.hpp"
#include "himpact/impact_estimation.hpp"
#include "himpact/io.hpp"
#include "himpact/kernels.hpp"
#include "himpact/model_fit.hpp"
#include "himpact/rng.hpp"
#include "synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace himpact;
namespace fs = std::filesystem;
using io::json;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit;  // seconds, 0 for none
    std::function<Outcome()> run;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// --- 1 -----------------------------------------------------------------------

Outcome kappa_series_oracle() {
    const auto phi = sample_kernel(ExponentialKernel{0.5, 1.0}, 1e-3, 20.0);
    const auto r = kappa_series(phi);
    double err = 0.0;
    for (std::size_t k = 0; k < r.kappa.size(); ++k) {
        err = std::max(err, std::abs(r.kappa[k] - 0.5 * std::exp(-1.5 * r.kappa.time(k))));
    }
    return {err < 1e-3, "sup error " + fmt("%.2e", err) + " (< 1e-3), " + std::to_string(r.terms) + " terms"};
}

// --- 2 -----------------------------------------------------------------------

Outcome kappa_norm_identity() {
    double worst = 0.0;
    for (double n : {0.3, 0.6, 0.8456}) {
        for (const Kernel k : {Kernel{ExponentialKernel::with_norm(n, 1.0)}, Kernel{PowerLawKernel::with_norm(n, -1.5)}}) {
            const auto phi = sample_kernel(k, 1e-2, 40.0);
            const double norm = l1_norm(phi);
            const auto kappa = kappa_series(phi).kappa;
            worst = std::max(worst, std::abs(l1_norm(kappa) - norm / (1.0 + norm)));
        }
    }
    return {worst < 1e-3, "max |l1(kappa) - n/(1+n)| " + fmt("%.2e", worst) + " (< 1e-3) over 6 kernels"};
}

// --- 3 -----------------------------------------------------------------------

Outcome expected_counts_vs_mc() {
    auto spec = HawkesSpec::cross(0.8, PowerLawKernel::with_norm(0.6, -1.5), 10.0);
    const std::vector<PiecewiseLinear> exo{PiecewiseLinear::box(1.0, 4.0, 2.0), PiecewiseLinear::constant(0.0)};
    std::vector<double> grid;
    for (int m = 1; m <= 20; ++m) grid.push_back(0.5 * m);
    const auto e = expected_counts(spec, exo, grid);
    const auto mc = monte_carlo_counts(spec, exo, 10000, grid, 2024);
    double worst = 0.0;
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t m = 0; m < grid.size(); ++m) worst = std::max(worst, std::abs(e[d][m] - mc[d].mean[m]) / mc[d].stderr_[m]);
    }
    return {worst < 3.0, "max |E - MC| / se " + fmt("%.2f", worst) + " (< 3) at 20 points x 2 dims, 1e4 paths"};
}

// --- 4 -----------------------------------------------------------------------

Outcome analytic_vs_mc() {
    HimSpec him;
    him.mu = 1.0;
    him.phi = ExponentialKernel{0.5, 1.0};
    him.schedule = TradingSchedule::constant(0.0, 60.0, 1.0);
    std::vector<double> grid;
    for (int m = 1; m <= 24; ++m) grid.push_back(10.0 * m);
    double worst = 0.0;
    for (double C : {0.0, 0.5, 1.0}) {
        him.C = C;
        const auto mc = monte_carlo_impact(him, 100000, grid, 77);
        const auto an = impact_curve_analytic(him, grid);
        for (std::size_t m = 0; m < grid.size(); ++m) worst = std::max(worst, std::abs(mc.mean[m] - an.eta[m]) / mc.stderr_[m]);
    }
    return {worst < 3.0, "max |MC - analytic| / se " + fmt("%.2f", worst) + " (< 3) on 24 points of [0, 4T], C in {0, 0.5, 1}"};
}

// --- 5 -----------------------------------------------------------------------

Outcome permanent_limit() {
    HimSpec spec;
    spec.phi = ExponentialKernel::with_norm(0.5, 1.0);
    spec.schedule = TradingSchedule::constant(0.0, 10.0, 1.0);
    CurveOptions opt;
    opt.dt = 0.02;
    double worst = 0.0;
    for (double C : {0.0, 0.5}) {
        spec.C = C;
        const double want = spec.f(1.0) * 10.0 * (1.0 - C) / 1.5;
        const auto num = permanent_impact_numeric(spec, 100.0, opt);
        worst = std::max(worst, std::abs(num.value / want - 1.0));
    }
    spec.C = 1.0;
    std::vector<double> t;
    for (int m = 1; m <= 100; ++m) t.push_back(10.0 * m);
    const auto c = impact_curve_analytic(spec, t, opt);
    const double peak = *std::max_element(c.eta.begin(), c.eta.end());
    bool decreasing = true;
    for (std::size_t i = 10; i + 1 < c.eta.size(); ++i) decreasing = decreasing && c.eta[i + 1] <= c.eta[i] + 1e-12;
    const double last = std::abs(c.eta.back()) / peak;
    return {worst < 0.02 && decreasing && last < 1e-3,
            "C in {0, 0.5}: max rel error " + fmt("%.2e", worst) + " (< 2%); C = 1: eta(100T)/peak " + fmt("%.1e", last) +
                (decreasing ? ", nonincreasing after 10T" : ", NOT monotone")};
}

// --- 6 -----------------------------------------------------------------------

Outcome decay_exponents() {
    CurveOptions opt;
    opt.dt = 0.02;
    std::string detail;
    bool ok = true;
    for (double b : {-1.5, -1.2}) {
        HimSpec spec;
        spec.phi = PowerLawKernel::with_norm(0.8456, b, 0.25);
        spec.C = 0.5;
        spec.schedule = TradingSchedule::constant(0.0, 1.0, 1.0);
        const auto fit = decay_exponent(spec, 5.0, 50.0, opt);
        ok = ok && std::abs(fit.exponent - (b + 1.0)) < 0.15;
        detail += "b=" + fmt("%.1f", b) + ": " + fmt("%.3f", fit.exponent) + " (target " + fmt("%.1f", b + 1.0) + " +- 0.15) ";
    }
    return {ok, detail};
}

// --- 7 -----------------------------------------------------------------------

Outcome transient_recovery() {
    const auto d = synth::power_profile(500, 0.64, 0.01, 0.3, 2024);
    const double g = transient_fit(rescaled_average(d)).exponent;
    return {std::abs(g - 0.64) < 0.02, "exponent " + fmt("%.4f", g) + " (0.64 +- 0.02), 500 records, 30% noise"};
}

// --- 8 -----------------------------------------------------------------------

Outcome regression_recovery() {
    Rng rng(8);
    const std::size_t n = 10000;
    std::vector<double> R(n), y(n), clean(n);
    for (std::size_t i = 0; i < n; ++i) {
        R[i] = std::exp(std::log(1e-3) + rng.uniform() * std::log(200.0));
        clean[i] = std::sqrt(R[i]);
        y[i] = clean[i] + 0.05 * rng.normal();
    }
    const auto noisy = direct_regression(y, {R}, Loss::L2);
    double worst = 0.0;
    for (auto loss : {Loss::L1, Loss::L2, Loss::loglog}) {
        const auto f = direct_regression(clean, {R}, loss);
        worst = std::max({worst, std::abs(f.gamma[0] - 0.5), std::abs(f.a - 1.0)});
    }
    const bool ok = std::abs(noisy.gamma[0] - 0.5) < 0.05 && worst < 1e-10;
    return {ok, "noisy L2 gamma " + fmt("%.4f", noisy.gamma[0]) + " (0.5 +- 0.05); noiseless max error " + fmt("%.1e", worst) +
                    " (< 1e-10) over L1, L2, loglog"};
}

// --- 9 -----------------------------------------------------------------------

Outcome residual_trace_sign() {
    Rng rng(31);
    const std::size_t n = 5000;
    std::vector<double> R(n), T(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        R[i] = std::exp(std::log(1e-3) + rng.uniform() * std::log(200.0));
        T[i] = std::exp(std::log(180.0) + rng.uniform() * std::log(40.0));
        y[i] = std::sqrt(R[i]) * std::pow(T[i], -0.25);
    }
    const auto fit = direct_regression(y, {R}, Loss::L2);
    const auto tr = residual_trace(fit.residuals, T, 10);
    return {tr.slope < 0.0 && tr.count.size() == 10, "trace slope vs T " + fmt("%.3e", tr.slope) + " (< 0), 10 quantiles"};
}

// --- 10 ----------------------------------------------------------------------

Outcome fit_round_trip() {
    const std::vector<double> minutes{15.0, 30.0, 60.0, 90.0};
    const std::vector<double> Cs{0.5, 0.7, 0.8, 0.85};
    FitProblem p;
    const auto s = rescaled_grid(100, 2.0);
    for (std::size_t i = 0; i < minutes.size(); ++i) {
        HimSpec spec;
        spec.phi = PowerLawKernel::with_norm(0.8456, -1.5, 0.25);
        spec.C = Cs[i];
        spec.schedule = TradingSchedule::constant(0.0, minutes[i], 1.0);
        std::vector<double> t;
        for (double x : s) t.push_back(x * minutes[i]);
        CurveOptions opt;
        opt.dt = 0.01;
        auto eta = impact_curve_analytic(spec, t, opt).eta;
        for (auto& v : eta) v *= 2e-3;
        p.curves.push_back(make_curve(s, eta));
        p.durations.push_back(60.0 * minutes[i]);
    }
    const auto r = fit(p);
    double worst_C = 0.0;
    for (std::size_t i = 0; i < Cs.size(); ++i) worst_C = std::max(worst_C, std::abs(r.C[i] - Cs[i]));
    const bool ok = worst_C < 0.1 && std::abs(r.b + 1.5) < 0.2 && r.relative_objective < 1e-4;
    return {ok, "max |dC| " + fmt("%.2e", worst_C) + " (< 0.1), b " + fmt("%.4f", r.b) + " (-1.5 +- 0.2), objective/scale " +
                    fmt("%.1e", r.relative_objective) + " (< 1e-4)"};
}

// --- 11 ----------------------------------------------------------------------

Outcome anticipation_property() {
    // Every record trades at the same rate, so impact depends only on time since t0.
    HimSpec spec;
    spec.phi = PowerLawKernel::with_norm(0.8456, -1.5, 0.25);
    spec.C = 0.7;
    const double R0 = 0.001, T0 = 300.0, nu = R0 / T0;
    const std::size_t ppu = 400;
    Dataset d;
    std::size_t id = 0;
    for (int i = 1; i <= 4; ++i) {
        for (double m : {1.1, 1.4, 1.7}) {
            const double T = m * std::ldexp(T0, i - 1);
            for (int side : {1, -1}) {
                auto rec = synth::record(id++, 36000.0, T, side, nu * T, 0.1);
                spec.schedule = TradingSchedule::constant(0.0, T / 60.0, 1.0);
                std::vector<double> t;
                for (double s : rescaled_grid(ppu, 2.0)) t.push_back(s * T / 60.0);
                CurveOptions opt;
                opt.dt = 0.01;
                const auto eta = impact_curve_analytic(spec, t, opt).eta;
                std::size_t k = 0;
                d.series.push_back(synth::series(rec, [&](double) { return 1e-3 * eta[k++]; }, ppu));
                d.records.push_back(rec);
            }
        }
    }
    AverageOptions opt;
    opt.points_per_unit = ppu;
    const auto res = anticipation_groups(d, R0, T0, 4, opt);
    double worst = 0.0;
    for (const auto& p : res.pairs) worst = std::max(worst, p.relative);
    return {res.pairs.size() == 3 && worst < 0.02,
            std::to_string(res.pairs.size()) + " adjacent pairs, max sup distance / scale " + fmt("%.2e", worst) + " (< 2%)"};
}

// --- 12 ----------------------------------------------------------------------

Outcome daily_closure() {
    const auto c = synth::daily_cohort(3000, 0.05, 8);
    ProfileOptions opt;
    opt.n_boot = 500;
    opt.seed = 1;
    const std::size_t last = kProfileDays - 1;
    const auto raw = postexec_profile(c.records, opt);
    const auto fitted = fit_sqrt_model(c.records);
    const auto deb = debias_profiles(c.records, c.followups, fitted.a, 0.5, opt);
    const double lo = deb.idiosyncratic_band.lo[last], hi = deb.idiosyncratic_band.hi[last];
    const bool ok = raw.idiosyncratic_band.lo[last] > 0.0 && lo <= 0.0 && hi >= 0.0;
    return {ok, "day 20 raw " + fmt("%.1f", raw.idiosyncratic[last]) + " bp [" + fmt("%.1f", raw.idiosyncratic_band.lo[last]) +
                    ", " + fmt("%.1f", raw.idiosyncratic_band.hi[last]) + "], debiased " + fmt("%.1f", deb.idiosyncratic[last]) +
                    " bp [" + fmt("%.1f", lo) + ", " + fmt("%.1f", hi) + "] (95% band must contain 0)"};
}

// --- 13 ----------------------------------------------------------------------

fs::path scratch() {
    static const fs::path root = [] {
        auto p = fs::temp_directory_path() / ("himpact_accept_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

void put(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

bool cli(const std::string& args) {
    const std::string cmd = std::string(HIMPACT_CLI) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

/// Files that differ between two output trees (or are missing from one).
std::size_t tree_diff(const fs::path& a, const fs::path& b, std::size_t& files) {
    std::size_t bad = 0;
    std::set<fs::path> seen;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        seen.insert(rel);
        ++files;
        if (!fs::exists(b / rel) || io::read_text(e.path()) != io::read_text(b / rel)) ++bad;
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        if (e.is_regular_file() && !seen.count(fs::relative(e.path(), b))) ++bad;
    }
    return bad;
}

void write_daily_inputs(const fs::path& dir) {
    Rng rng(4);
    const std::size_t days = 90;
    io::CsvWriter closes({"instrument", "date", "close"}), index({"index", "date", "close"}), map({"instrument", "index"}),
        meta({"id", "instrument", "date", "side", "R"});
    auto date = [](std::size_t d) { return "2023-" + std::string(d < 10 ? "00" : d < 100 ? "0" : "") + std::to_string(d); };
    std::vector<double> idx(days, 100.0);
    for (std::size_t d = 1; d < days; ++d) idx[d] = idx[d - 1] * std::exp(0.01 * rng.normal());
    for (std::size_t d = 0; d < days; ++d) index.row({"IDX", date(d), io::num(idx[d])});
    for (int i = 0; i < 6; ++i) {
        const std::string name = "S" + std::to_string(i);
        map.row({name, "IDX"});
        const double beta = 0.6 + 0.2 * i;
        double p = 20.0;
        for (std::size_t d = 0; d < days; ++d) {
            if (d > 0) p *= std::exp(beta * std::log(idx[d] / idx[d - 1]) + 0.01 * rng.normal());
            closes.row({name, date(d), io::num(p)});
        }
        for (std::size_t d = 25; d < 60; d += 3) {
            meta.row({name + "_" + std::to_string(d), name, date(d), rng.uniform() < 0.5 ? "B" : "S", io::num(0.05 * rng.uniform())});
        }
    }
    put(dir / "closes.csv", closes.str());
    put(dir / "index.csv", index.str());
    put(dir / "map.csv", map.str());
    put(dir / "meta.csv", meta.str());
}

Outcome determinism() {
    const auto root = scratch();
    const json spec{{"mu", 1.0},
                    {"kernel", {{"family", "power_law"}, {"norm", 0.8}, {"b", -1.5}, {"offset", 0.25}}},
                    {"C", 0.6},
                    {"f", {{"form", "power"}, {"a", 2.0}, {"p", 1.0}}},
                    {"schedule", {{"t0", 0.0}, {"T", 30.0}, {"r", 1.0}}}};
    json specs = json::array();
    for (double T : {20.0, 40.0}) {
        auto s = spec;
        s["schedule"]["T"] = T;
        specs.push_back(s);
    }
    const std::vector<std::pair<std::string, json>> configs{
        {"simulate", {{"command", "simulate"},
                      {"seed", 5},
                      {"simulate", {{"spec", spec}, {"n_paths", 400}, {"export", {{"records", 30}}}}}}},
        {"curve", {{"command", "curve"}, {"curve", {{"specs", specs}, {"s_max", 2.0}, {"points_per_unit", 40}}}}},
        {"estimate", {{"command", "estimate"},
                      {"seed", 5},
                      {"estimate",
                       {{"metaorders", (root / "simulate_a" / "metaorders.csv").string()},
                        {"prices_dir", (root / "simulate_a" / "prices").string()},
                        {"regression", json::object()},
                        {"trace", {{"variable", "R"}}},
                        {"bootstrap", {{"draws", 40}}},
                        {"slices", {{"quantiles", 3}}}}}}},
        {"fit", {{"command", "fit"},
                 {"dt", 0.05},
                 {"fit",
                  {{"curves", {{{"path", (root / "curve_a" / "curve_0.csv").string()}, {"duration", 20.0}},
                               {{"path", (root / "curve_a" / "curve_1.csv").string()}, {"duration", 40.0}}}},
                   {"time_unit", 1.0},
                   {"optimizer", {{"starts", 2}, {"max_cycles", 10}}}}}}},
        {"daily", {{"command", "daily"},
                   {"seed", 5},
                   {"daily",
                    {{"closes", (root / "daily_in" / "closes.csv").string()},
                     {"index_closes", (root / "daily_in" / "index.csv").string()},
                     {"index_map", (root / "daily_in" / "map.csv").string()},
                     {"metaorders", (root / "daily_in" / "meta.csv").string()},
                     {"n_boot", 100},
                     {"autocorr", {{"max_lag", 5}, {"n_boot", 50}}}}}}},
    };
    write_daily_inputs(root / "daily_in");
    std::string detail;
    bool ok = true;
    std::size_t total = 0;
    for (const auto& [name, cfg] : configs) {
        const auto file = root / (name + ".json");
        put(file, cfg.dump(2));
        const auto a = root / (name + "_a"), b = root / (name + "_b"), c = root / (name + "_c");
        const bool ran = cli("--config " + file.string() + " --out " + a.string()) &&
                         cli("--config " + file.string() + " --out " + b.string()) &&
                         cli("--config " + (a / "run.json").string() + " --out " + c.string());
        std::size_t files = 0, dummy = 0;
        const std::size_t bad = ran ? tree_diff(a, b, files) + tree_diff(a, c, dummy) : 1;
        total += files;
        ok = ok && ran && bad == 0 && files > 0;
        detail += name + (ran ? (bad == 0 ? " ok" : " DIFF") : " FAILED") + "; ";
    }
    return {ok, detail + std::to_string(total) + " files compared (two runs + replay from run.json)"};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "kappa series vs closed form (exponential kernel)", 5.0, kappa_series_oracle},
        {2, "kappa norm identity, both families", 0.0, kappa_norm_identity},
        {3, "expected counts vs Monte Carlo (d = 2)", 60.0, expected_counts_vs_mc},
        {4, "analytic impact vs Monte Carlo (1e5 paths)", 300.0, analytic_vs_mc},
        {5, "long-horizon limit f(r) T (1 - C) / (1 + ||phi||)", 0.0, permanent_limit},
        {6, "decay exponent b + 1 on [5T, 50T]", 0.0, decay_exponents},
        {7, "transient exponent recovery", 0.0, transient_recovery},
        {8, "power-law regression recovery", 0.0, regression_recovery},
        {9, "residual trace sign", 0.0, residual_trace_sign},
        {10, "model fit round trip", 600.0, fit_round_trip},
        {11, "anticipation groups nest", 0.0, anticipation_property},
        {12, "daily debiasing closes to zero", 0.0, daily_closure},
        {13, "seeded CLI runs are byte-identical", 0.0, determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0 && secs >= c.time_limit) {
            o.pass = false;
            o.detail += "; over time limit " + fmt("%.0f", c.time_limit) + " s";
        }
        failures += !o.pass;
        std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    fs::remove_all(scratch());
    return failures == 0 ? 0 : 1;
}
