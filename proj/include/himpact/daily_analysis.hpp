#pragma once

// Daily-scale pipeline: CAPM split of post-execution returns, metaorder-flow
// autocorrelation, and removal of follow-up flow impact.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace himpact {

/// Closes before and after the execution day D.
inline constexpr int kDaysBefore = 21;  // D-21 .. D-1
inline constexpr int kDaysAfter = 20;   // D .. D+20
inline constexpr std::size_t kCloses = kDaysBefore + kDaysAfter + 1;
inline constexpr std::size_t kReturns = kCloses - 1;
inline constexpr std::size_t kProfileDays = kDaysAfter + 1;  // offsets 0..20

struct DailyRecord {
    std::string id;
    std::string instrument;
    std::string date;
    int side{1};
    double R{0.0};
    /// close[k] is the close of day D - 21 + k.
    std::vector<double> close;
    std::vector<double> index_close;

    void validate() const;
};

struct CapmResult {
    double beta{0.0};
    /// Returns on days D-20 .. D+20.
    std::vector<double> stock_returns;
    std::vector<double> index_returns;
    std::vector<double> residuals;
};

/// Least squares without intercept of stock log-returns on index log-returns.
[[nodiscard]] CapmResult capm_decompose(const DailyRecord& record);

/// Cumulative log moves since the D-1 close, side-signed, basis points.
struct RecordProfile {
    std::vector<double> systematic;
    std::vector<double> idiosyncratic;
    std::vector<double> total;
};

[[nodiscard]] RecordProfile record_profile(const DailyRecord& record);

struct ProfileBand {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct PostExecProfile {
    std::vector<int> day;
    std::vector<double> systematic;
    std::vector<double> idiosyncratic;
    std::vector<double> total;
    std::vector<double> idiosyncratic_stderr;
    std::vector<double> total_stderr;
    /// Bootstrap bands over records; empty unless requested.
    ProfileBand idiosyncratic_band;
    ProfileBand total_band;
    std::size_t n{0};
};

struct ProfileOptions {
    std::size_t n_boot{0};
    std::uint64_t seed{0};
    double level{0.95};
};

[[nodiscard]] PostExecProfile average_profiles(std::span<const RecordProfile> profiles,
                                               const ProfileOptions& options = {});
[[nodiscard]] PostExecProfile postexec_profile(std::span<const DailyRecord> records,
                                               const ProfileOptions& options = {});

/// Same-instrument metaorder flow on days D+1 .. D+20, as nonnegative buy and
/// sell participations.
struct FollowUp {
    std::vector<double> buy;
    std::vector<double> sell;
};

/// Remove a * sgn(net) |net|^exponent from the stock's log-return on each
/// follow-up day, then redo the CAPM split and the profile.
[[nodiscard]] RecordProfile debias_record(const DailyRecord& record, const FollowUp& followup, double a,
                                          double exponent = 0.5);

[[nodiscard]] PostExecProfile debias_profiles(std::span<const DailyRecord> records, std::span<const FollowUp> followups,
                                              double a, double exponent = 0.5, const ProfileOptions& options = {});

struct SqrtFit {
    double a{0.0};
    double exponent{0.5};
    double stderr_{0.0};
    std::size_t n{0};
};

/// L2 fit of y = a R^exponent through the origin; exponent in [0.4, 0.7].
[[nodiscard]] SqrtFit fit_sqrt_model(std::span<const double> R, std::span<const double> y, double exponent = 0.5);
/// y = side * day-D log return.
[[nodiscard]] SqrtFit fit_sqrt_model(std::span<const DailyRecord> records, double exponent = 0.5);

struct AutocorrResult {
    std::vector<std::size_t> lag;
    std::vector<double> value;
    std::vector<double> q25;
    std::vector<double> q50;
    std::vector<double> q75;
    std::vector<std::size_t> pairs;
};

/// Pooled lag correlation of daily signed participation across instruments;
/// lagged pairs are resampled with replacement for the quartiles.
[[nodiscard]] AutocorrResult participation_autocorr(const std::vector<std::vector<double>>& series,
                                                    std::size_t max_lag, std::size_t n_boot, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Assembly from flat tables.

struct DatedSeries {
    std::vector<std::string> date;  // sorted ascending (ISO dates)
    std::vector<double> value;
};

struct DailyMetaorder {
    std::string id;
    std::string instrument;
    std::string date;
    int side{1};
    double R{0.0};
};

struct DailyDataset {
    std::vector<DailyRecord> records;
    std::vector<FollowUp> followups;
    std::vector<std::string> notes;
};

/// Build records with full coverage; others are skipped with a note.
[[nodiscard]] DailyDataset assemble_daily(std::span<const DailyMetaorder> metaorders,
                                          const std::map<std::string, DatedSeries>& closes,
                                          const std::map<std::string, DatedSeries>& index_closes,
                                          const std::map<std::string, std::string>& index_of);

/// Signed daily participation sum per instrument on its own trading days.
[[nodiscard]] std::map<std::string, std::vector<double>> daily_participation(
    std::span<const DailyMetaorder> metaorders, const std::map<std::string, DatedSeries>& closes);

} // namespace himpact
