#include "cli.hpp"

#include "himpact/error.hpp"
#include "himpact/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace himpact;
using namespace himpact::cli;

namespace {

const char* const kCommands[] = {"simulate", "curve", "estimate", "fit", "daily"};

void report(const std::string& code, const std::string& message) {
    const json err{{"error", {{"code", code}, {"message", message}}}};
    std::cerr << err.dump() << "\n" << "himpact: error: " << message << "\n";
}

struct PathFlag {
    std::string flag;
    std::string key;
    std::string value;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hawkes impact model: simulation, analytic curves, estimation, calibration, daily profiles"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    double dt = 0.0;
    int threads = 0;
    auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
    auto* o_seed = app.add_option("--seed", seed, "Random seed");
    auto* o_out = app.add_option("--out", out_dir, "Output directory");
    auto* o_dt = app.add_option("--dt", dt, "Numerical grid step")->check(CLI::PositiveNumber);
    auto* o_threads = app.add_option("--threads", threads, "Worker threads (0: runtime default)");

    std::map<std::string, std::vector<PathFlag>> path_flags{
        {"simulate", {{"--spec", "spec_path", {}}}},
        {"curve", {{"--spec", "spec_path", {}}}},
        {"estimate", {{"--metaorders", "metaorders", {}}, {"--prices-dir", "prices_dir", {}}}},
        {"fit", {{"--problem", "problem", {}}}},
        {"daily",
         {{"--closes", "closes", {}},
          {"--index-closes", "index_closes", {}},
          {"--index-map", "index_map", {}},
          {"--metaorders", "metaorders", {}}}},
    };
    std::size_t n_paths = 0;
    CLI::Option* o_paths = nullptr;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> help{
        {"simulate", "Simulate the Hawkes price model and its Monte Carlo impact curve"},
        {"curve", "Analytic impact curves"},
        {"estimate", "Impact curves and regressions from metaorder data"},
        {"fit", "Calibrate kernel and C to impact curves"},
        {"daily", "Daily post-execution profiles, debiasing and flow autocorrelation"},
    };
    for (const char* name : kCommands) {
        auto* sub = app.add_subcommand(name, help.at(name));
        for (auto& f : path_flags[name]) sub->add_option(f.flag, f.value, "Input path");
        if (std::string(name) == "simulate") o_paths = sub->add_option("--n-paths", n_paths, "Monte Carlo paths");
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report("usage", e.what());
        return 2;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) command = name;
    }

    try {
        json config = json::object();
        fs::path base = fs::current_path();
        if (o_config->count()) {
            config = io::parse_json(io::read_text(config_path), config_path);
            if (!config.is_object()) fail("invalid_argument", "config must be a JSON object");
            base = fs::absolute(config_path).parent_path();
        }
        if (command.empty()) {
            if (!config.contains("command") || !config["command"].is_string()) {
                fail("usage", "no subcommand given and the config has no 'command'");
            }
            command = config["command"].get<std::string>();
            if (!subs.count(command)) fail("usage", "unknown command '" + command + "'");
        }
        for (const auto& [key, value] : config.items()) {
            const bool known = key == "command" || key == "seed" || key == "dt" || key == "threads" || key == "out" ||
                               key == command;
            if (!known) fail("invalid_argument", "config: unknown key '" + key + "'");
        }
        if (config.contains("command") && config["command"] != command) {
            fail("invalid_argument", "config is for '" + config["command"].dump() + "', not '" + command + "'");
        }

        Context ctx;
        ctx.seed = o_seed->count() ? seed : config.value("seed", std::uint64_t{0});
        ctx.dt = o_dt->count() ? dt : config.value("dt", default_dt(command));
        if (default_dt(command) > 0.0 && !(ctx.dt > 0.0)) fail("invalid_argument", "dt must be > 0");
        set_thread_count(o_threads->count() ? threads : config.value("threads", 0));
        if (o_out->count() == 0) {
            if (!config.contains("out")) fail("invalid_argument", "no output directory (--out or config 'out')");
            out_dir = config["out"].get<std::string>();
            if (fs::path(out_dir).is_relative()) out_dir = (base / out_dir).string();
        }

        json block = config.contains(command) ? config[command] : json::object();
        if (!block.is_object()) fail("invalid_argument", "config." + command + " must be an object");
        for (const auto& f : path_flags[command]) {
            if (f.value.empty()) continue;
            block[f.key] = fs::absolute(f.value).lexically_normal().string();
            if (f.key == "spec_path") block.erase("spec");
        }
        if (o_paths && o_paths->count()) block["n_paths"] = n_paths;

        Params params(block, command, base);
        Outputs outputs;
        if (command == "simulate") outputs = cmd_simulate(params, ctx);
        else if (command == "curve") outputs = cmd_curve(params, ctx);
        else if (command == "estimate") outputs = cmd_estimate(params, ctx);
        else if (command == "fit") outputs = cmd_fit(params, ctx);
        else outputs = cmd_daily(params, ctx);
        params.finish();

        json sidecar{{"command", command}, {"seed", ctx.seed}};
        if (default_dt(command) > 0.0) sidecar["dt"] = ctx.dt;
        sidecar[command] = params.resolved();
        outputs["run.json"] = sidecar.dump(2) + "\n";

        const fs::path out = out_dir;
        for (const auto& [name, content] : outputs) io::write_atomic(out / name, content);
        return 0;
    } catch (const Error& e) {
        report(e.code(), e.what());
    } catch (const json::exception& e) {
        report("parse", e.what());
    } catch (const fs::filesystem_error& e) {
        report("io", e.what());
    } catch (const std::exception& e) {
        report("internal", e.what());
    }
    return 1;
}
