#pragma once

// Flat-file formats: CSV tables for every module and JSON for specs and
// results. Writes go through a temporary file and a rename.

#include "himpact/daily_analysis.hpp"
#include "himpact/hawkes_sim.hpp"
#include "himpact/him_model.hpp"
#include "himpact/impact_estimation.hpp"
#include "himpact/model_fit.hpp"

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace himpact::io {

using json = nlohmann::ordered_json;

/// "%.12g"
[[nodiscard]] std::string num(double v);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
/// Write to path + ".tmp" then rename over path; parent directories are created.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
    /// Index of a required column; parse error naming the column otherwise.
    [[nodiscard]] std::size_t column(std::string_view name) const;
    [[nodiscard]] double number(std::size_t row, std::size_t col) const;
    [[nodiscard]] const std::string& text(std::size_t row, std::size_t col) const { return rows[row][col]; }
    [[nodiscard]] std::size_t size() const { return rows.size(); }
};

[[nodiscard]] CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row(const std::vector<std::string>& cells);
    CsvWriter& row(const std::vector<double>& cells);
    [[nodiscard]] const std::string& str() const { return out_; }

private:
    std::size_t width_;
    std::string out_;
};

// --- hawkes_sim / kernels -------------------------------------------------

[[nodiscard]] std::string events_csv(const EventStream& stream);
[[nodiscard]] std::string price_path_csv(const PricePath& path);
/// t, mean, stderr, n
[[nodiscard]] std::string mc_curve_csv(const McCurve& curve);
/// t, value (+ header JSON with dt, horizon, tail_mass)
[[nodiscard]] std::string sampled_function_csv(const SampledFunction& f);
[[nodiscard]] json sampled_function_header(const SampledFunction& f);

// --- him_model -------------------------------------------------------------

/// t, eta
[[nodiscard]] std::string analytic_curve_csv(const AnalyticCurve& curve);
[[nodiscard]] HimSpec him_spec_from_json(const json& j);
[[nodiscard]] json to_json(const HimSpec& spec);
[[nodiscard]] Kernel kernel_from_json(const json& j);
[[nodiscard]] json to_json(const Kernel& kernel);

// --- impact_estimation -----------------------------------------------------

/// s, mean, count and one column per band level (q25, q75, ...).
[[nodiscard]] std::string impact_curve_csv(const ImpactCurve& curve);
/// Curve with columns (s, mean|eta|value) or (t, eta|mean|value). With t,
/// s = (t - t0) / duration.
[[nodiscard]] ImpactCurve read_curve(const std::filesystem::path& path, double t0 = 0.0, double duration = 1.0);

/// id,instrument,date,t0_seconds,duration_seconds,side,v,V,vbar,sigma,psi[,child_orders]
[[nodiscard]] std::vector<MetaorderRecord> read_metaorders(const std::filesystem::path& path);
[[nodiscard]] std::vector<MetaorderRecord> parse_metaorders(const CsvTable& table);
[[nodiscard]] std::string metaorders_csv(std::span<const MetaorderRecord> records);
/// time_seconds,mid_price
[[nodiscard]] PriceSeries read_price_series(const std::filesystem::path& path);
[[nodiscard]] std::string price_series_csv(const PriceSeries& series);

// --- model_fit ---------------------------------------------------------------

[[nodiscard]] json to_json(const FitResult& result);

// --- daily_analysis ----------------------------------------------------------

/// key,date,close with key = "instrument" or "index".
[[nodiscard]] std::map<std::string, DatedSeries> read_closes(const std::filesystem::path& path, std::string_view key);
/// id,instrument,date,side,R
[[nodiscard]] std::vector<DailyMetaorder> read_daily_metaorders(const std::filesystem::path& path);
/// instrument,index
[[nodiscard]] std::map<std::string, std::string> read_index_map(const std::filesystem::path& path);
/// day_offset, systematic_bp, idiosyncratic_bp, total_bp (+ bands when present)
[[nodiscard]] std::string profile_csv(const PostExecProfile& profile);
[[nodiscard]] std::string autocorr_csv(const AutocorrResult& result);

// --- JSON helpers ------------------------------------------------------------

/// Error unless every key of `obj` is in `allowed`.
void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where);
[[nodiscard]] json parse_json(const std::string& text, const std::string& source);

} // namespace himpact::io
