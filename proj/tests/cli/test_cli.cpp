// Runs the himpact binary end to end on small inputs.

#include <doctest.h>

#include "himpact/io.hpp"
#include "himpact/rng.hpp"
#include "synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

namespace fs = std::filesystem;
using himpact::io::json;

namespace {

struct Run {
    int code{0};
    std::string err;
};

fs::path scratch() {
    static const fs::path root = [] {
        auto p = fs::temp_directory_path() / ("himpact_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path fresh(const std::string& name) {
    const auto p = scratch() / name;
    fs::remove_all(p);
    return p;
}

Run run(const std::string& args) {
    const auto err = scratch() / "stderr.txt";
    const std::string cmd = std::string(HIMPACT_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = himpact::io::read_text(err);
    return r;
}

void put(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) { return himpact::io::read_text(p); }

json exp_spec(double f_a, double C) {
    return json{{"mu", 1.0},
                {"kernel", {{"family", "exponential"}, {"norm", 0.5}, {"beta", 1.0}}},
                {"C", C},
                {"f", {{"form", "power"}, {"a", f_a}, {"p", 1.0}}},
                {"schedule", {{"t0", 0.0}, {"T", 20.0}, {"r", 1.0}}}};
}

fs::path write_config(const std::string& name, const json& j) {
    const auto p = scratch() / (name + ".json");
    put(p, j.dump(2));
    return p;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

} // namespace

TEST_CASE("simulate: zero impact function gives a flat mean curve") {
    const auto cfg = write_config("sim_f0", {{"command", "simulate"},
                                             {"simulate", {{"spec", exp_spec(0.0, 0.5)}, {"n_paths", 400}, {"points", 41}}}});
    const auto out = fresh("sim_f0");
    REQUIRE(run("--config " + cfg.string() + " --seed 3 --out " + out.string()).code == 0);
    const auto t = himpact::io::read_csv(out / "mc_curve.csv");
    const auto mean = t.column("mean"), se = t.column("stderr");
    for (std::size_t r = 1; r < t.size(); ++r) {
        CHECK(std::abs(t.number(r, mean)) <= 4.0 * t.number(r, se) + 1e-12);
    }
}

TEST_CASE("simulate: seeded runs are byte-identical and replay from run.json") {
    const json j{{"command", "simulate"},
                 {"simulate", {{"spec", exp_spec(2.0, 0.5)}, {"n_paths", 300}, {"export", {{"records", 5}}}}}};
    const auto cfg = write_config("sim_det", j);
    const auto a = fresh("det_a"), b = fresh("det_b"), c = fresh("det_c"), d = fresh("det_d");
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 11 --out " + a.string()).code == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 11 --threads 1 --out " + b.string()).code == 0);
    REQUIRE(run("--config " + (a / "run.json").string() + " --out " + c.string()).code == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 12 --out " + d.string()).code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        CHECK(slurp(e.path()) == slurp(b / rel));
        CHECK(slurp(e.path()) == slurp(c / rel));
        ++files;
    }
    CHECK(files == 6 + 5);
    CHECK(slurp(a / "mc_curve.csv") != slurp(d / "mc_curve.csv"));
    const auto sidecar = json::parse(slurp(a / "run.json"));
    CHECK(sidecar["seed"] == 11);
    CHECK_FALSE(sidecar.contains("out"));
    CHECK_FALSE(sidecar.contains("threads"));
}

TEST_CASE("simulate: doubling paths shrinks the standard error by about 1/sqrt(2)") {
    const auto cfg1 = write_config("sim_n1", {{"command", "simulate"},
                                              {"simulate", {{"spec", exp_spec(2.0, 0.5)}, {"n_paths", 1000}, {"points", 21}}}});
    const auto cfg2 = write_config("sim_n2", {{"command", "simulate"},
                                              {"simulate", {{"spec", exp_spec(2.0, 0.5)}, {"n_paths", 2000}, {"points", 21}}}});
    const auto a = fresh("n1"), b = fresh("n2");
    REQUIRE(run("--config " + cfg1.string() + " --out " + a.string()).code == 0);
    REQUIRE(run("--config " + cfg2.string() + " --out " + b.string()).code == 0);
    const auto ta = himpact::io::read_csv(a / "mc_curve.csv"), tb = himpact::io::read_csv(b / "mc_curve.csv");
    double ratio = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 5; r < ta.size(); ++r) {
        ratio += tb.number(r, 2) / ta.number(r, 2);
        ++n;
    }
    CHECK(ratio / static_cast<double>(n) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.08));
}

TEST_CASE("curve: one polyline per spec, and C = 1 decays to zero") {
    json specs = json::array();
    for (double C : {0.0, 0.5, 1.0}) specs.push_back(exp_spec(1.0, C));
    const auto cfg = write_config("curve", {{"command", "curve"},
                                            {"curve", {{"specs", specs}, {"s_max", 100.0}, {"points_per_unit", 4}}}});
    const auto out = fresh("curve");
    REQUIRE(run("--config " + cfg.string() + " --out " + out.string()).code == 0);
    CHECK(count_of(slurp(out / "curves.svg"), "<polyline") == 3);
    const auto last = himpact::io::read_csv(out / "curve_2.csv");
    double peak = 0.0;
    for (std::size_t r = 0; r < last.size(); ++r) peak = std::max(peak, last.number(r, 1));
    CHECK(std::abs(last.number(last.size() - 1, 1)) < 1e-3 * peak);
    const auto first = himpact::io::read_csv(out / "curve_0.csv");
    // f(r) T / (1 + ||phi||) with C = 0.
    CHECK(first.number(first.size() - 1, 1) == doctest::Approx(20.0 / 1.5).epsilon(0.02));

    const auto single = fresh("curve_single");
    const auto cfg1 = write_config("curve1", {{"command", "curve"}, {"curve", {{"spec", exp_spec(1.0, 0.5)}}}});
    REQUIRE(run("--config " + cfg1.string() + " --out " + single.string()).code == 0);
    CHECK(fs::exists(single / "curve.csv"));
    CHECK(count_of(slurp(single / "curves.svg"), "<polyline") == 1);
}

TEST_CASE("curve -> fit round trip recovers C") {
    const std::vector<double> Cs{0.5, 0.8};
    const std::vector<double> Ts{20.0, 60.0};
    json specs = json::array();
    for (std::size_t i = 0; i < Cs.size(); ++i) {
        specs.push_back({{"mu", 1.0},
                         {"kernel", {{"family", "power_law"}, {"norm", 0.8}, {"b", -1.5}, {"offset", 0.25}}},
                         {"C", Cs[i]},
                         {"schedule", {{"t0", 100.0}, {"T", Ts[i]}, {"r", 1.0}}}});
    }
    const auto curves = fresh("rt_curves");
    const auto cfg = write_config("rt_curve", {{"command", "curve"},
                                               {"curve", {{"specs", specs}, {"s_max", 2.0}, {"points_per_unit", 50}}}});
    REQUIRE(run("--config " + cfg.string() + " --dt 0.01 --out " + curves.string()).code == 0);

    json problem{{"curves", json::array()}, {"time_unit", 1.0}, {"optimizer", {{"starts", 2}, {"tol", 1e-5}}}};
    for (std::size_t i = 0; i < Cs.size(); ++i) {
        problem["curves"].push_back(
            {{"path", (curves / ("curve_" + std::to_string(i) + ".csv")).string()}, {"duration", Ts[i]}, {"t0", 100.0}});
    }
    const auto pfile = scratch() / "problem.json";
    put(pfile, problem.dump());
    const auto out = fresh("rt_fit");
    REQUIRE(run("fit --problem " + pfile.string() + " --dt 0.05 --out " + out.string()).code == 0);
    const auto res = json::parse(slurp(out / "fit_result.json"));
    for (std::size_t i = 0; i < Cs.size(); ++i) CHECK(std::abs(res["C"][i].get<double>() - Cs[i]) < 0.1);
    CHECK(std::abs(res["b"].get<double>() + 1.5) < 0.2);
    CHECK(res["relative_objective"].get<double>() < 1e-4);
    CHECK(count_of(slurp(out / "fit.svg"), "<polyline") == 4);
}

TEST_CASE("estimate: empty input fails without writing anything") {
    const auto dir = scratch() / "empty_in";
    put(dir / "metaorders.csv", "id,instrument,date,t0_seconds,duration_seconds,side,v,V,vbar,sigma,psi\n");
    fs::create_directories(dir / "prices");
    const auto out = fresh("empty_out");
    const auto r = run("estimate --metaorders " + (dir / "metaorders.csv").string() + " --prices-dir " +
                       (dir / "prices").string() + " --out " + out.string());
    CHECK(r.code != 0);
    CHECK_FALSE(fs::exists(out));
    const auto first_line = r.err.substr(0, r.err.find('\n'));
    const auto err = json::parse(first_line);
    CHECK(err["error"]["code"] == "insufficient_data");
}

TEST_CASE("estimate: malformed header names the missing column") {
    const auto dir = scratch() / "bad_header";
    put(dir / "metaorders.csv",
        "id,instrument,date,t0_seconds,duration_seconds,side,v,V,volume,sigma,psi\nm,X,2024-01-02,36000,600,B,1,100,10,0.02,0.001\n");
    const auto out = fresh("bad_out");
    const auto r = run("estimate --metaorders " + (dir / "metaorders.csv").string() + " --prices-dir " +
                       (dir / "prices").string() + " --out " + out.string());
    CHECK(r.code != 0);
    CHECK(r.err.find("'vbar'") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("estimate: default filter keeps the brute-force count") {
    const auto dir = scratch() / "filter_in";
    himpact::Rng rng(5);
    std::vector<himpact::MetaorderRecord> recs;
    for (std::size_t i = 0; i < 300; ++i) {
        const double T = 60.0 + 3000.0 * rng.uniform();
        const double t0 = 32400.0 + 27000.0 * rng.uniform();
        const double R = std::exp(std::log(2e-4) + (std::log(0.4) - std::log(2e-4)) * rng.uniform());
        const double r = 0.01 + 0.5 * rng.uniform();
        auto rec = synth::record(i, t0, T, rng.uniform() < 0.5 ? 1 : -1, R, r);
        rec.instrument = "X" + std::to_string(i);
        put(dir / "prices" / (rec.instrument + "_" + rec.date + ".csv"),
            himpact::io::price_series_csv(synth::series(rec, [&](double s) { return 1e-3 * std::sqrt(std::min(s, 1.0)); })));
        recs.push_back(rec);
    }
    put(dir / "metaorders.csv", himpact::io::metaorders_csv(recs));

    std::size_t expected = 0;
    for (const auto& m : recs) {
        const bool keep = m.T > 180.0 && m.r() >= 0.03 && m.r() <= 0.4 && m.R() >= 0.001 && m.R() <= 0.2 &&
                          m.t0 + 2.0 * m.T < 17.5 * 3600.0;
        expected += keep;
    }
    const auto cfg = write_config("filter", {{"command", "estimate"},
                                             {"estimate",
                                              {{"metaorders", (dir / "metaorders.csv").string()},
                                               {"prices_dir", (dir / "prices").string()},
                                               {"filter", "default"},
                                               {"regression", {{"losses", {"L2"}}}},
                                               {"trace", {{"variable", "T"}}}}}});
    const auto out = fresh("filter_out");
    REQUIRE(run("--config " + cfg.string() + " --out " + out.string()).code == 0);
    const auto summary = json::parse(slurp(out / "estimate.json"));
    CHECK(summary["kept"].get<std::size_t>() == expected);
    CHECK(summary["records"] == 300);
    CHECK(fs::exists(out / "regression.csv"));
    CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("estimate runs on simulator output") {
    const auto sim = fresh("pipe_sim");
    const auto cfg = write_config("pipe", {{"command", "simulate"},
                                           {"simulate",
                                            {{"spec", exp_spec(3.0, 0.5)},
                                             {"n_paths", 50},
                                             {"export", {{"records", 40}}}}}});
    REQUIRE(run("--config " + cfg.string() + " --out " + sim.string()).code == 0);
    const auto out = fresh("pipe_est");
    REQUIRE(run("estimate --metaorders " + (sim / "metaorders.csv").string() + " --prices-dir " +
                (sim / "prices").string() + " --out " + out.string())
                .code == 0);
    const auto curve = himpact::io::read_csv(out / "curve.csv");
    CHECK(curve.size() == 201);
}

TEST_CASE("config: unknown keys are rejected") {
    const auto cfg = write_config("unknown", {{"command", "curve"}, {"curve", {{"spec", exp_spec(1.0, 0.5)}, {"smax", 3}}}});
    const auto out = fresh("unknown_out");
    const auto r = run("--config " + cfg.string() + " --out " + out.string());
    CHECK(r.code != 0);
    CHECK(r.err.find("smax") != std::string::npos);
    CHECK_FALSE(fs::exists(out));

    const auto cfg2 = write_config("unknown_top", {{"command", "curve"}, {"colour", "red"}});
    CHECK(run("--config " + cfg2.string() + " --out " + out.string()).code != 0);
}

TEST_CASE("daily: beta table matches the generator") {
    const auto dir = scratch() / "daily_in";
    const std::vector<double> betas{0.5, 1.0, 1.5};
    const std::size_t days = 80;
    himpact::Rng rng(9);
    himpact::io::CsvWriter closes({"instrument", "date", "close"}), index({"index", "date", "close"}),
        map({"instrument", "index"}), meta({"id", "instrument", "date", "side", "R"});
    std::vector<double> idx(days, 1000.0);
    for (std::size_t d = 1; d < days; ++d) idx[d] = idx[d - 1] * std::exp(0.01 * rng.normal());
    auto date = [](std::size_t d) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2024-%03zu", d);
        return std::string(buf);
    };
    for (std::size_t d = 0; d < days; ++d) index.row({"IDX", date(d), himpact::io::num(idx[d])});
    for (std::size_t i = 0; i < betas.size(); ++i) {
        const std::string name = "S" + std::to_string(i);
        double p = 50.0;
        for (std::size_t d = 0; d < days; ++d) {
            if (d > 0) p *= std::exp(betas[i] * std::log(idx[d] / idx[d - 1]) + 1e-5 * rng.normal());
            closes.row({name, date(d), himpact::io::num(p)});
        }
        map.row({name, "IDX"});
        meta.row({"m" + std::to_string(i), name, date(30), i % 2 ? "S" : "B", "0.01"});
        meta.row({"f" + std::to_string(i), name, date(35), "B", "0.02"});
    }
    put(dir / "closes.csv", closes.str());
    put(dir / "index.csv", index.str());
    put(dir / "map.csv", map.str());
    put(dir / "meta.csv", meta.str());
    const auto out = fresh("daily_out");
    const auto cfg = write_config("daily", {{"command", "daily"}, {"daily", {{"n_boot", 50}, {"autocorr", {{"max_lag", 3}, {"n_boot", 20}}}}}});
    REQUIRE(run("daily --config " + cfg.string() + " --closes " + (dir / "closes.csv").string() + " --index-closes " +
                (dir / "index.csv").string() + " --index-map " + (dir / "map.csv").string() + " --metaorders " +
                (dir / "meta.csv").string() + " --out " + out.string())
                .code == 0);
    const auto beta = himpact::io::read_csv(out / "beta.csv");
    REQUIRE(beta.size() == 6);
    for (std::size_t r = 0; r < beta.size(); ++r) {
        const auto inst = beta.text(r, beta.column("instrument"));
        const double truth = betas[static_cast<std::size_t>(inst[1] - '0')];
        CHECK(beta.number(r, beta.column("beta")) == doctest::Approx(truth).epsilon(1e-3));
    }
    const auto profile = himpact::io::read_csv(out / "profile.csv");
    CHECK(profile.size() == 21);
    CHECK(fs::exists(out / "profile_debiased.csv"));
    CHECK(himpact::io::read_csv(out / "autocorr.csv").size() == 3);
    CHECK(json::parse(slurp(out / "sqrt_fit.json")).contains("a"));
}
