#include "himpact/daily_analysis.hpp"

#include "himpact/error.hpp"
#include "himpact/impact_estimation.hpp"
#include "himpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>

namespace himpact {

namespace {

constexpr double kBp = 1e4;

template <class F>
void parallel_for(std::size_t n, F&& body) {
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

double signed_power(double x, double p) { return x == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(x), p), x); }

} // namespace

void DailyRecord::validate() const {
    const std::string tag = "daily record " + id;
    require(side == 1 || side == -1, tag + ": side must be +1 or -1");
    if (close.size() != kCloses || index_close.size() != kCloses) {
        fail("insufficient_data", tag + ": need " + std::to_string(kCloses) + " closes (D-21 .. D+20)");
    }
    for (std::size_t k = 0; k < kCloses; ++k) {
        require(std::isfinite(close[k]) && close[k] > 0.0, tag + ": closes must be > 0");
        require(std::isfinite(index_close[k]) && index_close[k] > 0.0, tag + ": index closes must be > 0");
    }
}

CapmResult capm_decompose(const DailyRecord& record) {
    record.validate();
    CapmResult r;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < kReturns; ++k) {
        const double x = std::log(record.index_close[k + 1]) - std::log(record.index_close[k]);
        const double y = std::log(record.close[k + 1]) - std::log(record.close[k]);
        r.index_returns.push_back(x);
        r.stock_returns.push_back(y);
        sxx += x * x;
        sxy += x * y;
    }
    if (sxx == 0.0) fail("invalid_argument", "capm_decompose: index returns have zero variance for " + record.id);
    r.beta = sxy / sxx;
    for (std::size_t k = 0; k < kReturns; ++k) r.residuals.push_back(r.stock_returns[k] - r.beta * r.index_returns[k]);
    return r;
}

RecordProfile record_profile(const DailyRecord& record) {
    const auto capm = capm_decompose(record);
    const double eps = static_cast<double>(record.side) * kBp;
    const std::size_t before = kDaysBefore - 1;  // position of the D-1 close
    RecordProfile p;
    double w = 0.0;
    for (std::size_t d = 0; d < kProfileDays; ++d) {
        w += capm.residuals[before + d];
        const double sys = capm.beta * (std::log(record.index_close[before + 1 + d]) - std::log(record.index_close[before]));
        const double tot = std::log(record.close[before + 1 + d]) - std::log(record.close[before]);
        p.systematic.push_back(eps * sys);
        p.idiosyncratic.push_back(eps * w);
        p.total.push_back(eps * tot);
    }
    return p;
}

PostExecProfile average_profiles(std::span<const RecordProfile> profiles, const ProfileOptions& options) {
    if (profiles.empty()) fail("insufficient_data", "post-execution profile of an empty record set");
    require(options.level > 0.0 && options.level < 1.0, "profile: level must be in (0, 1)");
    const std::size_t n = profiles.size();
    const double nd = static_cast<double>(n);
    PostExecProfile out;
    out.n = n;
    for (std::size_t d = 0; d < kProfileDays; ++d) {
        double s = 0.0, i = 0.0, t = 0.0, ii = 0.0, tt = 0.0;
        for (const auto& p : profiles) {
            s += p.systematic[d];
            i += p.idiosyncratic[d];
            t += p.total[d];
            ii += p.idiosyncratic[d] * p.idiosyncratic[d];
            tt += p.total[d] * p.total[d];
        }
        out.day.push_back(static_cast<int>(d));
        out.systematic.push_back(s / nd);
        out.idiosyncratic.push_back(i / nd);
        out.total.push_back(t / nd);
        auto se = [&](double sum, double sumsq) {
            if (n < 2) return 0.0;
            const double m = sum / nd;
            return std::sqrt(std::max(0.0, (sumsq - nd * m * m) / (nd - 1.0)) / nd);
        };
        out.idiosyncratic_stderr.push_back(se(i, ii));
        out.total_stderr.push_back(se(t, tt));
    }
    if (options.n_boot == 0) return out;

    // draws[b][d] for idiosyncratic and total
    std::vector<double> idio(options.n_boot * kProfileDays), tot(options.n_boot * kProfileDays);
    parallel_for(options.n_boot, [&](std::size_t b) {
        Rng rng(options.seed, b);
        double* pi = &idio[b * kProfileDays];
        double* pt = &tot[b * kProfileDays];
        for (std::size_t j = 0; j < n; ++j) {
            const auto& p = profiles[rng.below(n)];
            for (std::size_t d = 0; d < kProfileDays; ++d) {
                pi[d] += p.idiosyncratic[d];
                pt[d] += p.total[d];
            }
        }
        for (std::size_t d = 0; d < kProfileDays; ++d) {
            pi[d] /= nd;
            pt[d] /= nd;
        }
    });
    const double lo = 0.5 * (1.0 - options.level), hi = 0.5 * (1.0 + options.level);
    std::vector<double> col(options.n_boot);
    auto band = [&](const std::vector<double>& draws, ProfileBand& out_band) {
        for (std::size_t d = 0; d < kProfileDays; ++d) {
            for (std::size_t b = 0; b < options.n_boot; ++b) col[b] = draws[b * kProfileDays + d];
            out_band.lo.push_back(quantile(col, lo));
            out_band.hi.push_back(quantile(col, hi));
        }
    };
    band(idio, out.idiosyncratic_band);
    band(tot, out.total_band);
    return out;
}

PostExecProfile postexec_profile(std::span<const DailyRecord> records, const ProfileOptions& options) {
    std::vector<RecordProfile> p(records.size());
    parallel_for(records.size(), [&](std::size_t i) { p[i] = record_profile(records[i]); });
    return average_profiles(p, options);
}

RecordProfile debias_record(const DailyRecord& record, const FollowUp& followup, double a, double exponent) {
    require(std::isfinite(a) && a >= 0.0, "debias: a must be >= 0");
    require(exponent > 0.0, "debias: exponent must be > 0");
    if (followup.buy.size() != static_cast<std::size_t>(kDaysAfter) ||
        followup.sell.size() != static_cast<std::size_t>(kDaysAfter)) {
        fail("insufficient_data", "debias: follow-up flow needs days D+1 .. D+20 for " + record.id);
    }
    // Remove follow-up impact from the stock's log prices, then split again.
    DailyRecord clean = record;
    clean.validate();
    double acc = 0.0;
    for (std::size_t d = 1; d < kProfileDays; ++d) {
        const double buy = followup.buy[d - 1], sell = followup.sell[d - 1];
        if (!(buy >= 0.0 && sell >= 0.0)) fail("invalid_argument", "debias: negative follow-up participation for " + record.id);
        acc += a * signed_power(buy - sell, exponent);
        if (acc != 0.0) clean.close[kDaysBefore + d] *= std::exp(-acc);
    }
    return record_profile(clean);
}

PostExecProfile debias_profiles(std::span<const DailyRecord> records, std::span<const FollowUp> followups, double a,
                                double exponent, const ProfileOptions& options) {
    require(records.size() == followups.size(), "debias: one follow-up entry per record");
    std::vector<RecordProfile> p(records.size());
    parallel_for(records.size(), [&](std::size_t i) { p[i] = debias_record(records[i], followups[i], a, exponent); });
    return average_profiles(p, options);
}

SqrtFit fit_sqrt_model(std::span<const double> R, std::span<const double> y, double exponent) {
    require(R.size() == y.size(), "fit_sqrt_model: R and response sizes differ");
    require(exponent >= 0.4 && exponent <= 0.7, "fit_sqrt_model: exponent must be in [0.4, 0.7]");
    if (R.empty()) fail("insufficient_data", "fit_sqrt_model: no records");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
        require(std::isfinite(R[i]) && R[i] > 0.0, "fit_sqrt_model: degenerate participation (R must be > 0)");
        require(std::isfinite(y[i]), "fit_sqrt_model: non-finite response");
        const double x = std::pow(R[i], exponent);
        sxx += x * x;
        sxy += x * y[i];
    }
    SqrtFit f;
    f.exponent = exponent;
    f.n = R.size();
    f.a = sxy / sxx;
    if (R.size() > 1) {
        double rss = 0.0;
        for (std::size_t i = 0; i < R.size(); ++i) {
            const double e = y[i] - f.a * std::pow(R[i], exponent);
            rss += e * e;
        }
        f.stderr_ = std::sqrt(rss / static_cast<double>(R.size() - 1) / sxx);
    }
    return f;
}

SqrtFit fit_sqrt_model(std::span<const DailyRecord> records, double exponent) {
    std::vector<double> R, y;
    for (const auto& r : records) {
        r.validate();
        R.push_back(r.R);
        y.push_back(r.side * (std::log(r.close[kDaysBefore]) - std::log(r.close[kDaysBefore - 1])));
    }
    return fit_sqrt_model(R, y, exponent);
}

AutocorrResult participation_autocorr(const std::vector<std::vector<double>>& series, std::size_t max_lag,
                                      std::size_t n_boot, std::uint64_t seed) {
    require(max_lag >= 1, "participation_autocorr: max_lag must be >= 1");
    if (series.empty()) fail("insufficient_data", "participation_autocorr: no series");
    bool varies = false;
    for (const auto& s : series) {
        if (s.size() <= max_lag) fail("insufficient_data", "participation_autocorr: series shorter than max_lag + 1");
        for (double v : s) {
            require(std::isfinite(v), "participation_autocorr: non-finite participation");
            if (v != s.front()) varies = true;
        }
    }
    if (!varies) fail("invalid_argument", "participation_autocorr: constant series");

    auto corr = [](const std::vector<double>& x, const std::vector<double>& y, const std::vector<std::size_t>* pick) {
        const std::size_t n = pick ? pick->size() : x.size();
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = pick ? (*pick)[i] : i;
            mx += x[j];
            my += y[j];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = pick ? (*pick)[i] : i;
            sxx += (x[j] - mx) * (x[j] - mx);
            syy += (y[j] - my) * (y[j] - my);
            sxy += (x[j] - mx) * (y[j] - my);
        }
        return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : NAN;
    };

    AutocorrResult out;
    std::vector<double> draws(n_boot);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        std::vector<double> x, y;
        for (const auto& s : series) {
            for (std::size_t t = 0; t + lag < s.size(); ++t) {
                x.push_back(s[t]);
                y.push_back(s[t + lag]);
            }
        }
        const double v = corr(x, y, nullptr);
        if (std::isnan(v)) fail("invalid_argument", "participation_autocorr: constant series at lag " + std::to_string(lag));
        out.lag.push_back(lag);
        out.value.push_back(v);
        out.pairs.push_back(x.size());
        if (n_boot == 0) {
            out.q25.push_back(v);
            out.q50.push_back(v);
            out.q75.push_back(v);
            continue;
        }
        parallel_for(n_boot, [&](std::size_t b) {
            Rng rng(seed, (static_cast<std::uint64_t>(lag) << 32) + b);
            std::vector<std::size_t> pick(x.size());
            for (auto& j : pick) j = rng.below(x.size());
            draws[b] = corr(x, y, &pick);
        });
        std::vector<double> ok;
        for (double d : draws) {
            if (!std::isnan(d)) ok.push_back(d);
        }
        if (ok.empty()) ok.push_back(v);
        out.q25.push_back(quantile(ok, 0.25));
        out.q50.push_back(quantile(ok, 0.50));
        out.q75.push_back(quantile(ok, 0.75));
    }
    return out;
}

DailyDataset assemble_daily(std::span<const DailyMetaorder> metaorders, const std::map<std::string, DatedSeries>& closes,
                            const std::map<std::string, DatedSeries>& index_closes,
                            const std::map<std::string, std::string>& index_of) {
    // Per instrument and date: total buy and sell participation.
    std::map<std::string, std::map<std::string, std::pair<double, double>>> flow;
    for (const auto& m : metaorders) {
        require(m.side == 1 || m.side == -1, "daily metaorder " + m.id + ": side must be +1 or -1");
        require(std::isfinite(m.R) && m.R >= 0.0, "daily metaorder " + m.id + ": R must be >= 0");
        auto& f = flow[m.instrument][m.date];
        (m.side > 0 ? f.first : f.second) += m.R;
    }

    auto find_date = [](const DatedSeries& s, const std::string& d) -> std::ptrdiff_t {
        const auto it = std::lower_bound(s.date.begin(), s.date.end(), d);
        return it != s.date.end() && *it == d ? it - s.date.begin() : -1;
    };

    DailyDataset out;
    for (const auto& m : metaorders) {
        auto skip = [&](const std::string& why) { out.notes.push_back("metaorder " + m.id + " skipped: " + why); };
        const auto cs = closes.find(m.instrument);
        if (cs == closes.end()) {
            skip("no closes for " + m.instrument);
            continue;
        }
        const auto ix = index_of.find(m.instrument);
        if (ix == index_of.end()) {
            skip("no index for " + m.instrument);
            continue;
        }
        const auto is = index_closes.find(ix->second);
        if (is == index_closes.end()) {
            skip("no closes for index " + ix->second);
            continue;
        }
        const auto pos = find_date(cs->second, m.date);
        if (pos < kDaysBefore || pos + kDaysAfter >= static_cast<std::ptrdiff_t>(cs->second.date.size())) {
            skip("closes do not cover D-21 .. D+20");
            continue;
        }
        DailyRecord r;
        r.id = m.id;
        r.instrument = m.instrument;
        r.date = m.date;
        r.side = m.side;
        r.R = m.R;
        FollowUp fu;
        bool ok = true;
        for (std::ptrdiff_t k = pos - kDaysBefore; k <= pos + kDaysAfter; ++k) {
            const auto& d = cs->second.date[static_cast<std::size_t>(k)];
            const auto j = find_date(is->second, d);
            if (j < 0) {
                skip("index " + ix->second + " has no close on " + d);
                ok = false;
                break;
            }
            r.close.push_back(cs->second.value[static_cast<std::size_t>(k)]);
            r.index_close.push_back(is->second.value[static_cast<std::size_t>(j)]);
            if (k > pos) {
                const auto& days = flow[m.instrument];
                const auto f = days.find(d);
                fu.buy.push_back(f == days.end() ? 0.0 : f->second.first);
                fu.sell.push_back(f == days.end() ? 0.0 : f->second.second);
            }
        }
        if (!ok) continue;
        out.records.push_back(std::move(r));
        out.followups.push_back(std::move(fu));
    }
    return out;
}

std::map<std::string, std::vector<double>> daily_participation(std::span<const DailyMetaorder> metaorders,
                                                               const std::map<std::string, DatedSeries>& closes) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [name, s] : closes) out[name].assign(s.date.size(), 0.0);
    for (const auto& m : metaorders) {
        const auto cs = closes.find(m.instrument);
        if (cs == closes.end()) continue;
        const auto& dates = cs->second.date;
        const auto it = std::lower_bound(dates.begin(), dates.end(), m.date);
        if (it == dates.end() || *it != m.date) continue;
        out[m.instrument][static_cast<std::size_t>(it - dates.begin())] += m.side * m.R;
    }
    return out;
}

} // namespace himpact
