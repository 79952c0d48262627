#pragma once

#include "himpact/io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace himpact::cli {

using io::json;
namespace fs = std::filesystem;

/// Reads one config block. Every read records the resolved value (defaults
/// included); finish() rejects keys that were never read.
class Params {
public:
    Params(json block, std::string where, fs::path base);

    double number(const std::string& key, double fallback);
    double number(const std::string& key);
    std::size_t count(const std::string& key, std::size_t fallback);
    bool flag(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
    std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback);
    /// Input path, resolved against the config file's directory and stored absolute.
    fs::path path(const std::string& key);
    std::optional<fs::path> optional_path(const std::string& key);

    [[nodiscard]] bool has(const std::string& key) const { return block_.contains(key); }
    /// Raw sub-value; marks the key as read and stores `resolved` for it.
    const json& raw(const std::string& key);
    void store(const std::string& key, json value) { resolved_[key] = std::move(value); }
    void drop(const std::string& key) { resolved_.erase(key); }
    Params child(const std::string& key);
    void adopt(const std::string& key, Params& child);

    [[nodiscard]] const fs::path& base() const { return base_; }
    [[nodiscard]] const std::string& where() const { return where_; }
    void finish() const;
    [[nodiscard]] const json& resolved() const { return resolved_; }

private:
    const json* lookup(const std::string& key);

    json block_;
    std::string where_;
    fs::path base_;
    std::set<std::string> seen_;
    json resolved_ = json::object();
};

/// Files produced by a command, keyed by path relative to the output directory.
using Outputs = std::map<std::string, std::string>;

struct Context {
    std::uint64_t seed{0};
    /// Numerical grid step; commands without a grid ignore it.
    double dt{0.0};
};

/// Each command reads its block, computes everything, and returns the files.
/// Nothing touches the disk until the caller writes the outputs.
Outputs cmd_simulate(Params& p, const Context& ctx);
Outputs cmd_curve(Params& p, const Context& ctx);
Outputs cmd_estimate(Params& p, const Context& ctx);
Outputs cmd_fit(Params& p, const Context& ctx);
Outputs cmd_daily(Params& p, const Context& ctx);

/// Default grid step per command, 0 when the command has no grid.
double default_dt(const std::string& command);

/// HimSpec from "spec" (inline) or "spec_path"; the sidecar always gets it inline.
HimSpec read_spec(Params& p);

std::string pad_index(std::size_t i, std::size_t n);

} // namespace himpact::cli
