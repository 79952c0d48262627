#pragma once

// Empirical impact pipeline: return proxies, rescaled-time averages, quantile
// conditioning, power-law regressions, residual traces, bootstrap statistics,
// transient/decay fits and anticipation groups.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace himpact {

struct MetaorderRecord {
    std::string id;
    std::string instrument;
    std::string date;
    double t0{0.0};     // intraday seconds
    double T{0.0};      // duration, seconds
    int side{1};        // +1 buy, -1 sell
    double v{0.0};      // executed shares
    double V{0.0};      // daily market volume
    double vbar{0.0};   // market volume during execution
    double sigma{0.0};  // daily volatility
    double psi{0.0};    // average bid-ask spread
    /// Optional, 0 when unknown.
    std::size_t child_orders{0};

    [[nodiscard]] double R() const { return v / V; }
    [[nodiscard]] double r() const { return v / vbar; }
    [[nodiscard]] double nu_dot() const { return R() / T; }
};

void validate(const MetaorderRecord& rec);

/// Mid-price samples; lookups use the last sample at or before the query time.
struct PriceSeries {
    std::vector<double> time;
    std::vector<double> price;

    void validate() const;
    [[nodiscard]] bool empty() const { return time.empty(); }
    [[nodiscard]] bool covers(double a, double b) const;
    [[nodiscard]] double at(double t) const;
};

/// Records and their price series, aligned by index.
struct Dataset {
    std::vector<MetaorderRecord> records;
    std::vector<PriceSeries> series;

    void validate() const;
    [[nodiscard]] std::size_t size() const { return records.size(); }
};

/// (P_t - P_t0) / P_t0
[[nodiscard]] double return_proxy(const PriceSeries& series, double t0, double t);

enum class ResponseTransform { relative, log_return, log_over_spread };

[[nodiscard]] ResponseTransform parse_transform(std::string_view name);

/// eps * proxy(t0, t) under the chosen transform.
[[nodiscard]] double signed_response(const MetaorderRecord& rec, const PriceSeries& series, double t,
                                     ResponseTransform transform = ResponseTransform::relative);

struct AverageOptions {
    std::size_t points_per_unit{100};
    double s_max{2.0};
    std::vector<double> band_levels{0.25, 0.75};
    ResponseTransform transform{ResponseTransform::relative};
};

struct ImpactCurve {
    std::vector<double> s;
    std::vector<double> mean;
    std::vector<std::size_t> count;
    std::vector<double> band_levels;
    /// bands[j][k]: level band_levels[j] at s[k].
    std::vector<std::vector<double>> bands;
    std::size_t skipped{0};

    /// Linear interpolation on s.
    [[nodiscard]] double at(double s) const;
    [[nodiscard]] double value_at_one() const { return at(1.0); }
};

/// Wrap a deterministic curve (e.g. an analytic model curve on rescaled time).
[[nodiscard]] ImpactCurve make_curve(std::vector<double> s, std::vector<double> values);

[[nodiscard]] std::vector<double> rescaled_grid(std::size_t points_per_unit, double s_max);

/// Mean of eps * DeltaP at t0 + s T over records. Records whose series does
/// not cover [t0, t0 + s_max T] are skipped; all skipped is an error.
[[nodiscard]] ImpactCurve rescaled_average(const Dataset& data, const AverageOptions& options = {});
[[nodiscard]] ImpactCurve rescaled_average(const Dataset& data, std::span<const std::size_t> subset,
                                           const AverageOptions& options = {});

using Extractor = std::function<double(const MetaorderRecord&)>;

/// Named record variables: R, r, T, nu_dot, sigma, psi, v, V, vbar, t0.
[[nodiscard]] Extractor variable(std::string_view name);

struct QuantileBuckets {
    std::size_t k{0};
    /// Bucket of each input record.
    std::vector<std::size_t> bucket_of;
    std::vector<std::vector<std::size_t>> members;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Equal-count buckets: sort by value (stable in input order) and give rank j
/// to bucket floor(j K / n).
[[nodiscard]] QuantileBuckets quantile_buckets(std::span<const double> values, std::size_t K);

struct QuantileSlices {
    QuantileBuckets buckets;
    std::vector<double> impact;      // mean eps * DeltaP_T per bucket
    std::vector<std::size_t> count;  // records with coverage at s = 1
};

[[nodiscard]] QuantileSlices quantile_slices(const Dataset& data, const Extractor& x, std::size_t K,
                                             ResponseTransform transform = ResponseTransform::relative);

enum class Loss { L1, L2, loglog };

[[nodiscard]] Loss parse_loss(std::string_view name);
[[nodiscard]] std::string loss_name(Loss loss);

struct RegressionOptions {
    double gamma_lo{-2.0};
    double gamma_hi{2.0};
    std::size_t max_cycles{200};
    double tol{1e-12};
};

struct RegressionResult {
    double a{0.0};
    std::vector<double> gamma;
    Loss loss{Loss::L2};
    double loss_value{0.0};
    /// y - a prod X^gamma for every record (dropped ones included).
    std::vector<double> residuals;
    std::size_t n{0};
    std::size_t dropped{0};
    bool converged{true};
    std::size_t cycles{0};
    std::string diagnostics;
};

/// Fit y ~ a prod_i X_i^gamma_i. x holds one column per variable.
[[nodiscard]] RegressionResult direct_regression(std::span<const double> y,
                                                 const std::vector<std::vector<double>>& x, Loss loss,
                                                 const RegressionOptions& options = {});

/// Same fit on records: y = eps DeltaP_T, X_i = extractors applied to records.
[[nodiscard]] RegressionResult direct_regression(const Dataset& data, const std::vector<Extractor>& x, Loss loss,
                                                 const RegressionOptions& options = {},
                                                 ResponseTransform transform = ResponseTransform::relative);

/// Weighted median: minimiser of sum w_i |v_i - m| (lower median on ties).
[[nodiscard]] double weighted_median(std::span<const double> v, std::span<const double> w);

struct ResidualTrace {
    std::vector<double> y_mean;
    std::vector<double> residual_mean;
    std::vector<double> residual_stderr;
    std::vector<std::size_t> count;
    /// OLS slope of the bucket mean residual on the bucket mean of Y.
    double slope{0.0};
};

[[nodiscard]] ResidualTrace residual_trace(std::span<const double> residuals, std::span<const double> y,
                                           std::size_t K);

struct PowerFit {
    double exponent{0.0};
    double prefactor{0.0};
    double r2{0.0};
    std::size_t points{0};
};

/// log-log OLS of eta_s on s for s in [s_lo, s_hi].
[[nodiscard]] PowerFit transient_fit(const ImpactCurve& curve, double s_lo = 0.05, double s_hi = 1.0);

struct BootstrapStats {
    double mean{0.0};
    double q05{0.0}, q25{0.0}, q50{0.0}, q75{0.0}, q95{0.0};
    std::vector<double> draws;
};

struct BootstrapOptions {
    std::size_t n_draws{500};
    double frac{0.8};
    double s_lo{0.05};
    double s_hi{1.0};
    AverageOptions average{};
};

/// Transient exponent over n_draws subsamples of floor(frac n) records drawn
/// without replacement. Draws run in parallel; draw i uses stream (seed, i).
[[nodiscard]] BootstrapStats bootstrap_exponent(const Dataset& data, std::uint64_t seed,
                                                const BootstrapOptions& options = {});

/// Type-7 quantile of a sample.
[[nodiscard]] double quantile(std::vector<double> values, double p);

struct DecayLogLog {
    std::vector<double> s;
    std::vector<double> log_lag;   // log(s - 1)
    std::vector<double> log_diff;  // log(eta_s - eta_2)
    std::size_t dropped{0};
    [[nodiscard]] bool empty() const { return s.empty(); }
    /// OLS slope over points with s in [s_lo, s_hi].
    [[nodiscard]] double slope(double s_lo, double s_hi) const;
};

[[nodiscard]] DecayLogLog decay_loglog(const ImpactCurve& curve);

struct AnticipationGroup {
    std::size_t index{0};
    std::vector<std::size_t> members;
    std::optional<ImpactCurve> curve;
};

struct AnticipationPair {
    std::size_t i{0};
    std::size_t j{0};
    double sup_distance{0.0};
    /// sup distance over max |eta^(i)| on [0, 1].
    double relative{0.0};
    bool flagged{false};
};

struct AnticipationResult {
    std::vector<AnticipationGroup> groups;
    std::vector<AnticipationPair> pairs;
    std::vector<std::string> notes;
};

/// A_i = {R in [2^{i-1} R0, 2^i R0), T in [2^{i-1} T0, 2^i T0)}, i = 1..i_max.
/// Adjacent groups are compared on equal physical time: eta^(i)(s) against
/// eta^(i+1)(s / 2), s in [0, 1].
[[nodiscard]] AnticipationResult anticipation_groups(const Dataset& data, double R0, double T0,
                                                     std::size_t i_max = 5, const AverageOptions& options = {},
                                                     double flag_threshold = 0.02);

/// Ingestion filters, all optional.
struct IngestionFilter {
    std::optional<double> min_duration;  // T > min
    std::optional<double> r_min, r_max;
    std::optional<double> R_min, R_max;
    std::optional<double> closing_time;  // t0 + 2T < closing_time
    std::optional<std::size_t> min_child_orders;
};

struct FilterReport {
    std::vector<std::size_t> kept;
    std::size_t dropped_duration{0};
    std::size_t dropped_rate{0};
    std::size_t dropped_participation{0};
    std::size_t dropped_close{0};
    std::size_t dropped_child_orders{0};
};

[[nodiscard]] FilterReport apply_filter(std::span<const MetaorderRecord> records, const IngestionFilter& filter);

/// T > 3 min, r in [3%, 40%], R in [0.1%, 20%], t0 + 2T
/// before a 17:30 close (seconds after midnight).
[[nodiscard]] IngestionFilter default_filter();

} // namespace himpact
