#include "cli.hpp"

#include "himpact/error.hpp"

#include <cmath>

namespace himpact::cli {

Params::Params(json block, std::string where, fs::path base)
    : block_(std::move(block)), where_(std::move(where)), base_(std::move(base)) {
    if (block_.is_null()) block_ = json::object();
    if (!block_.is_object()) fail("invalid_argument", where_ + " must be an object");
}

const json* Params::lookup(const std::string& key) {
    seen_.insert(key);
    const auto it = block_.find(key);
    return it == block_.end() ? nullptr : &*it;
}

double Params::number(const std::string& key, double fallback) {
    const json* v = lookup(key);
    double out = fallback;
    if (v) {
        if (!v->is_number()) fail("invalid_argument", where_ + "." + key + " must be a number");
        out = v->get<double>();
    }
    if (!std::isfinite(out)) fail("invalid_argument", where_ + "." + key + " must be finite");
    resolved_[key] = out;
    return out;
}

double Params::number(const std::string& key) {
    if (!block_.contains(key)) fail("invalid_argument", where_ + ": missing '" + key + "'");
    return number(key, 0.0);
}

std::size_t Params::count(const std::string& key, std::size_t fallback) {
    const json* v = lookup(key);
    std::size_t out = fallback;
    if (v) {
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            fail("invalid_argument", where_ + "." + key + " must be a nonnegative integer");
        }
        out = v->get<std::size_t>();
    }
    resolved_[key] = out;
    return out;
}

bool Params::flag(const std::string& key, bool fallback) {
    const json* v = lookup(key);
    bool out = fallback;
    if (v) {
        if (!v->is_boolean()) fail("invalid_argument", where_ + "." + key + " must be true or false");
        out = v->get<bool>();
    }
    resolved_[key] = out;
    return out;
}

std::string Params::text(const std::string& key, const std::string& fallback) {
    const json* v = lookup(key);
    std::string out = fallback;
    if (v) {
        if (!v->is_string()) fail("invalid_argument", where_ + "." + key + " must be a string");
        out = v->get<std::string>();
    }
    resolved_[key] = out;
    return out;
}

std::vector<double> Params::numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = lookup(key);
    if (v) {
        if (!v->is_array()) fail("invalid_argument", where_ + "." + key + " must be an array of numbers");
        fallback.clear();
        for (const auto& x : *v) {
            if (!x.is_number()) fail("invalid_argument", where_ + "." + key + " must be an array of numbers");
            fallback.push_back(x.get<double>());
        }
    }
    resolved_[key] = fallback;
    return fallback;
}

std::vector<std::string> Params::texts(const std::string& key, std::vector<std::string> fallback) {
    const json* v = lookup(key);
    if (v) {
        if (!v->is_array()) fail("invalid_argument", where_ + "." + key + " must be an array of strings");
        fallback.clear();
        for (const auto& x : *v) {
            if (!x.is_string()) fail("invalid_argument", where_ + "." + key + " must be an array of strings");
            fallback.push_back(x.get<std::string>());
        }
    }
    resolved_[key] = fallback;
    return fallback;
}

std::optional<fs::path> Params::optional_path(const std::string& key) {
    const json* v = lookup(key);
    if (!v) return std::nullopt;
    if (!v->is_string() || v->get<std::string>().empty()) fail("invalid_argument", where_ + "." + key + " must be a path");
    fs::path p = v->get<std::string>();
    if (p.is_relative()) p = base_ / p;
    p = fs::absolute(p).lexically_normal();
    resolved_[key] = p.string();
    return p;
}

fs::path Params::path(const std::string& key) {
    auto p = optional_path(key);
    if (!p) fail("invalid_argument", where_ + ": missing '" + key + "'");
    return *p;
}

const json& Params::raw(const std::string& key) {
    const json* v = lookup(key);
    if (!v) fail("invalid_argument", where_ + ": missing '" + key + "'");
    resolved_[key] = *v;
    return *v;
}

Params Params::child(const std::string& key) {
    const json* v = lookup(key);
    return Params(v ? *v : json::object(), where_ + "." + key, base_);
}

void Params::adopt(const std::string& key, Params& child) {
    child.finish();
    resolved_[key] = child.resolved();
}

void Params::finish() const {
    for (const auto& [key, value] : block_.items()) {
        if (!seen_.count(key)) fail("invalid_argument", where_ + ": unknown key '" + key + "'");
    }
}

std::string pad_index(std::size_t i, std::size_t n) {
    std::string s = std::to_string(i);
    const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
    return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

double default_dt(const std::string& command) {
    if (command == "simulate" || command == "curve") return 0.01;
    if (command == "fit") return 0.02;
    return 0.0;
}

HimSpec read_spec(Params& p) {
    if (p.has("spec") == p.has("spec_path")) fail("invalid_argument", p.where() + ": give exactly one of spec, spec_path");
    if (p.has("spec")) {
        const auto spec = io::him_spec_from_json(p.raw("spec"));
        p.store("spec", io::to_json(spec));
        return spec;
    }
    const auto path = p.path("spec_path");
    const auto spec = io::him_spec_from_json(io::parse_json(io::read_text(path), path.string()));
    p.drop("spec_path");
    p.store("spec", io::to_json(spec));
    return spec;
}

} // namespace himpact::cli
