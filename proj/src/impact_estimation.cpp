#include "himpact/impact_estimation.hpp"

#include "himpact/error.hpp"
#include "himpact/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

namespace himpact {

// ---------------------------------------------------------------------------
// Records and series

void validate(const MetaorderRecord& rec) {
    auto bad = [&](const std::string& what) { fail("invalid_argument", "metaorder " + rec.id + ": " + what); };
    if (!(std::isfinite(rec.T) && rec.T > 0.0)) bad("duration must be > 0");
    if (!std::isfinite(rec.t0)) bad("t0 must be finite");
    if (rec.side != 1 && rec.side != -1) bad("side must be +1 or -1");
    if (!(rec.v > 0.0 && rec.V > 0.0 && rec.vbar > 0.0)) bad("v, V, vbar must be > 0");
    if (!(std::isfinite(rec.v) && std::isfinite(rec.V) && std::isfinite(rec.vbar))) bad("volumes must be finite");
    if (rec.v > rec.V) bad("v must not exceed V");
    if (rec.r() > 1.0) bad("r = v/vbar must be <= 1");
    if (!(std::isfinite(rec.sigma) && rec.sigma >= 0.0)) bad("sigma must be >= 0");
    if (!(std::isfinite(rec.psi) && rec.psi >= 0.0)) bad("psi must be >= 0");
}

void PriceSeries::validate() const {
    require(time.size() == price.size(), "price series: time/price size mismatch");
    for (std::size_t i = 0; i < time.size(); ++i) {
        require(std::isfinite(time[i]), "price series: non-finite time");
        require(std::isfinite(price[i]) && price[i] > 0.0, "price series: prices must be > 0");
        if (i > 0) require(time[i] >= time[i - 1], "price series: times must be sorted");
    }
}

bool PriceSeries::covers(double a, double b) const {
    if (time.empty()) return false;
    const double slack = 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
    return time.front() <= a + slack && time.back() >= b - slack;
}

double PriceSeries::at(double t) const {
    if (time.empty()) fail("insufficient_data", "price series is empty");
    const double slack = 1e-9 * std::max(1.0, std::abs(t));
    const auto it = std::upper_bound(time.begin(), time.end(), t + slack);
    if (it == time.begin()) {
        std::ostringstream msg;
        msg << "price series starts after t = " << t;
        fail("insufficient_data", msg.str());
    }
    return price[static_cast<std::size_t>(it - time.begin()) - 1];
}

void Dataset::validate() const {
    require(records.size() == series.size(), "dataset: one price series per record");
    for (const auto& r : records) himpact::validate(r);
    for (const auto& s : series) s.validate();
}

double return_proxy(const PriceSeries& series, double t0, double t) {
    require(t >= t0, "return_proxy: t before t0");
    const double p0 = series.at(t0);
    return (series.at(t) - p0) / p0;
}

ResponseTransform parse_transform(std::string_view name) {
    if (name == "relative") return ResponseTransform::relative;
    if (name == "log" || name == "log_return") return ResponseTransform::log_return;
    if (name == "log_over_spread") return ResponseTransform::log_over_spread;
    fail("invalid_argument", "unknown response transform '" + std::string(name) + "'");
}

double signed_response(const MetaorderRecord& rec, const PriceSeries& series, double t, ResponseTransform transform) {
    const double eps = static_cast<double>(rec.side);
    switch (transform) {
    case ResponseTransform::relative:
        return eps * return_proxy(series, rec.t0, t);
    case ResponseTransform::log_return:
        require(t >= rec.t0, "signed_response: t before t0");
        return eps * std::log(series.at(t) / series.at(rec.t0));
    case ResponseTransform::log_over_spread:
        require(t >= rec.t0, "signed_response: t before t0");
        require(rec.psi > 0.0, "signed_response: spread transform needs psi > 0");
        return eps * std::log(series.at(t) / series.at(rec.t0)) / rec.psi;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Curves

double quantile(std::vector<double> v, double p) {
    require(!v.empty(), "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "quantile level must be in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double ImpactCurve::at(double x) const {
    require(!s.empty(), "ImpactCurve::at on an empty curve");
    if (x <= s.front()) return mean.front();
    if (x >= s.back()) return mean.back();
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const auto i = static_cast<std::size_t>(it - s.begin()) - 1;
    const double w = (x - s[i]) / (s[i + 1] - s[i]);
    return (1.0 - w) * mean[i] + w * mean[i + 1];
}

ImpactCurve make_curve(std::vector<double> s, std::vector<double> values) {
    require(s.size() == values.size() && !s.empty(), "make_curve: size mismatch");
    ImpactCurve c;
    c.count.assign(s.size(), 1);
    c.s = std::move(s);
    c.mean = std::move(values);
    return c;
}

std::vector<double> rescaled_grid(std::size_t points_per_unit, double s_max) {
    require(points_per_unit >= 1, "points_per_unit must be >= 1");
    require(s_max > 0.0, "s_max must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(s_max * static_cast<double>(points_per_unit)));
    std::vector<double> s(n + 1);
    for (std::size_t k = 0; k <= n; ++k) s[k] = static_cast<double>(k) / static_cast<double>(points_per_unit);
    return s;
}

ImpactCurve rescaled_average(const Dataset& data, const AverageOptions& options) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return rescaled_average(data, all, options);
}

ImpactCurve rescaled_average(const Dataset& data, std::span<const std::size_t> subset, const AverageOptions& options) {
    require(data.records.size() == data.series.size(), "dataset: one price series per record");
    const auto s = rescaled_grid(options.points_per_unit, options.s_max);
    const std::size_t m = s.size();
    const std::size_t n = subset.size();

    // Row per record, filled independently, reduced in subset order.
    std::vector<double> rows(n * m, 0.0);
    std::vector<char> used(n, 0);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t j = 0; j < n; ++j) {
        try {
            const auto idx = subset[j];
            const auto& rec = data.records[idx];
            const auto& ser = data.series[idx];
            if (!ser.covers(rec.t0, rec.t0 + options.s_max * rec.T)) continue;
            for (std::size_t k = 0; k < m; ++k) {
                rows[j * m + k] = signed_response(rec, ser, rec.t0 + s[k] * rec.T, options.transform);
            }
            used[j] = 1;
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    ImpactCurve c;
    c.s = s;
    c.mean.assign(m, 0.0);
    c.band_levels = options.band_levels;
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!used[j]) continue;
        ++count;
        for (std::size_t k = 0; k < m; ++k) c.mean[k] += rows[j * m + k];
    }
    c.skipped = n - count;
    if (count == 0) fail("insufficient_data", "rescaled_average: no record has price coverage over [t0, t0 + s_max T]");
    for (auto& v : c.mean) v /= static_cast<double>(count);
    c.count.assign(m, count);

    for (double level : options.band_levels) {
        std::vector<double> band(m);
        std::vector<double> col;
        col.reserve(count);
        for (std::size_t k = 0; k < m; ++k) {
            col.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) col.push_back(rows[j * m + k]);
            }
            band[k] = quantile(col, level);
        }
        c.bands.push_back(std::move(band));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Quantile conditioning

Extractor variable(std::string_view name) {
    if (name == "R") return [](const MetaorderRecord& r) { return r.R(); };
    if (name == "r") return [](const MetaorderRecord& r) { return r.r(); };
    if (name == "T") return [](const MetaorderRecord& r) { return r.T; };
    if (name == "nu_dot") return [](const MetaorderRecord& r) { return r.nu_dot(); };
    if (name == "sigma") return [](const MetaorderRecord& r) { return r.sigma; };
    if (name == "psi") return [](const MetaorderRecord& r) { return r.psi; };
    if (name == "v") return [](const MetaorderRecord& r) { return r.v; };
    if (name == "V") return [](const MetaorderRecord& r) { return r.V; };
    if (name == "vbar") return [](const MetaorderRecord& r) { return r.vbar; };
    if (name == "t0") return [](const MetaorderRecord& r) { return r.t0; };
    fail("invalid_argument", "unknown record variable '" + std::string(name) + "'");
}

QuantileBuckets quantile_buckets(std::span<const double> values, std::size_t K) {
    const std::size_t n = values.size();
    require(K >= 2, "quantile buckets: K must be >= 2");
    if (K > n) fail("insufficient_data", "quantile buckets: K exceeds the number of records");
    for (double v : values) require(std::isfinite(v), "quantile buckets: non-finite value");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    require(*mn < *mx, "quantile buckets: variable is constant");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    QuantileBuckets q;
    q.k = K;
    q.bucket_of.assign(n, 0);
    q.members.assign(K, {});
    q.lower.assign(K, INFINITY);
    q.upper.assign(K, -INFINITY);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t b = j * K / n;
        const std::size_t idx = order[j];
        q.bucket_of[idx] = b;
        q.members[b].push_back(idx);
        q.lower[b] = std::min(q.lower[b], values[idx]);
        q.upper[b] = std::max(q.upper[b], values[idx]);
    }
    return q;
}

QuantileSlices quantile_slices(const Dataset& data, const Extractor& x, std::size_t K, ResponseTransform transform) {
    std::vector<double> values(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) values[i] = x(data.records[i]);
    QuantileSlices out;
    out.buckets = quantile_buckets(values, K);
    out.impact.assign(K, 0.0);
    out.count.assign(K, 0);
    for (std::size_t b = 0; b < K; ++b) {
        for (std::size_t idx : out.buckets.members[b]) {
            const auto& rec = data.records[idx];
            const auto& ser = data.series[idx];
            if (!ser.covers(rec.t0, rec.t0 + rec.T)) continue;
            out.impact[b] += signed_response(rec, ser, rec.t0 + rec.T, transform);
            ++out.count[b];
        }
        if (out.count[b] > 0) out.impact[b] /= static_cast<double>(out.count[b]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Traces and fits

ResidualTrace residual_trace(std::span<const double> residuals, std::span<const double> y, std::size_t K) {
    require(residuals.size() == y.size(), "residual_trace: residual count must match Y count");
    const auto q = quantile_buckets(y, K);
    ResidualTrace t;
    for (std::size_t b = 0; b < K; ++b) {
        const auto& mem = q.members[b];
        double sy = 0.0, sr = 0.0, srr = 0.0;
        for (std::size_t idx : mem) {
            sy += y[idx];
            sr += residuals[idx];
            srr += residuals[idx] * residuals[idx];
        }
        const double n = static_cast<double>(mem.size());
        const double mr = sr / n;
        t.y_mean.push_back(sy / n);
        t.residual_mean.push_back(mr);
        t.residual_stderr.push_back(mem.size() > 1 ? std::sqrt(std::max(0.0, (srr - n * mr * mr) / (n - 1.0)) / n) : 0.0);
        t.count.push_back(mem.size());
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t b = 0; b < K; ++b) {
        mx += t.y_mean[b];
        my += t.residual_mean[b];
    }
    mx /= static_cast<double>(K);
    my /= static_cast<double>(K);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t b = 0; b < K; ++b) {
        sxx += (t.y_mean[b] - mx) * (t.y_mean[b] - mx);
        sxy += (t.y_mean[b] - mx) * (t.residual_mean[b] - my);
    }
    t.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return t;
}

namespace {

PowerFit loglog_ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    PowerFit f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    f.points = x.size();
    return f;
}

} // namespace

PowerFit transient_fit(const ImpactCurve& curve, double s_lo, double s_hi) {
    require(s_lo > 0.0 && s_hi > s_lo, "transient_fit: need 0 < s_lo < s_hi");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < curve.s.size(); ++k) {
        const double s = curve.s[k];
        if (s < s_lo - 1e-12 || s > s_hi + 1e-12) continue;
        if (!(curve.mean[k] > 0.0)) {
            std::ostringstream msg;
            msg << "transient_fit: non-positive impact " << curve.mean[k] << " at s = " << s;
            fail("invalid_argument", msg.str());
        }
        x.push_back(std::log(s));
        y.push_back(std::log(curve.mean[k]));
    }
    if (x.size() < 2) fail("insufficient_data", "transient_fit: fewer than 2 grid points in range");
    return loglog_ols(x, y);
}

BootstrapStats bootstrap_exponent(const Dataset& data, std::uint64_t seed, const BootstrapOptions& options) {
    const std::size_t n = data.size();
    if (n < 10) fail("insufficient_data", "bootstrap_exponent: bucket needs at least 10 records");
    require(options.n_draws >= 1, "bootstrap_exponent: n_draws must be >= 1");
    require(options.frac > 0.0 && options.frac <= 1.0, "bootstrap_exponent: frac must be in (0, 1]");
    const auto m = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(options.frac * static_cast<double>(n))));
    AverageOptions avg = options.average;
    avg.s_max = options.s_hi;
    avg.band_levels.clear();

    BootstrapStats out;
    out.draws.assign(options.n_draws, 0.0);
    std::exception_ptr error;
#pragma omp parallel
    {
        std::vector<std::size_t> pool(n);
#pragma omp for schedule(dynamic, 4)
        for (std::size_t d = 0; d < options.n_draws; ++d) {
            try {
                std::iota(pool.begin(), pool.end(), std::size_t{0});
                Rng rng(seed, d);
                for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
                std::vector<std::size_t> pick(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
                std::sort(pick.begin(), pick.end());
                const auto curve = rescaled_average(data, pick, avg);
                out.draws[d] = transient_fit(curve, options.s_lo, options.s_hi).exponent;
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);

    out.mean = std::accumulate(out.draws.begin(), out.draws.end(), 0.0) / static_cast<double>(out.draws.size());
    out.q05 = quantile(out.draws, 0.05);
    out.q25 = quantile(out.draws, 0.25);
    out.q50 = quantile(out.draws, 0.50);
    out.q75 = quantile(out.draws, 0.75);
    out.q95 = quantile(out.draws, 0.95);
    return out;
}

DecayLogLog decay_loglog(const ImpactCurve& curve) {
    require(!curve.s.empty() && curve.s.back() >= 2.0 - 1e-9, "decay_loglog: curve must extend to s = 2");
    const double eta2 = curve.at(2.0);
    DecayLogLog out;
    for (std::size_t k = 0; k < curve.s.size(); ++k) {
        const double s = curve.s[k];
        if (s <= 1.0 + 1e-12 || s >= 2.0 - 1e-12) continue;
        const double d = curve.mean[k] - eta2;
        if (!(d > 0.0)) {
            ++out.dropped;
            continue;
        }
        out.s.push_back(s);
        out.log_lag.push_back(std::log(s - 1.0));
        out.log_diff.push_back(std::log(d));
    }
    return out;
}

double DecayLogLog::slope(double s_lo, double s_hi) const {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < s_lo - 1e-12 || s[i] > s_hi + 1e-12) continue;
        x.push_back(log_lag[i]);
        y.push_back(log_diff[i]);
    }
    if (x.size() < 2) fail("insufficient_data", "decay slope: fewer than 2 points in range");
    return loglog_ols(x, y).exponent;
}

// ---------------------------------------------------------------------------
// Anticipation groups

AnticipationResult anticipation_groups(const Dataset& data, double R0, double T0, std::size_t i_max,
                                       const AverageOptions& options, double flag_threshold) {
    require(R0 > 0.0 && T0 > 0.0, "anticipation_groups: R0 and T0 must be > 0");
    require(i_max >= 1, "anticipation_groups: i_max must be >= 1");
    AnticipationResult out;
    for (std::size_t i = 1; i <= i_max; ++i) {
        const double lo = std::ldexp(1.0, static_cast<int>(i) - 1);
        AnticipationGroup g;
        g.index = i;
        for (std::size_t idx = 0; idx < data.size(); ++idx) {
            const auto& r = data.records[idx];
            const double R = r.R();
            if (R >= lo * R0 && R < 2.0 * lo * R0 && r.T >= lo * T0 && r.T < 2.0 * lo * T0) g.members.push_back(idx);
        }
        if (g.members.empty()) {
            out.notes.push_back("group " + std::to_string(i) + " is empty");
        } else {
            try {
                g.curve = rescaled_average(data, g.members, options);
            } catch (const Error& e) {
                if (e.code() != "insufficient_data") throw;
                out.notes.push_back("group " + std::to_string(i) + ": " + e.what());
            }
        }
        out.groups.push_back(std::move(g));
    }
    for (std::size_t i = 0; i + 1 < out.groups.size(); ++i) {
        const auto& a = out.groups[i];
        const auto& b = out.groups[i + 1];
        if (!a.curve || !b.curve) {
            out.notes.push_back("pair (" + std::to_string(a.index) + ", " + std::to_string(b.index) + ") skipped");
            continue;
        }
        AnticipationPair p;
        p.i = a.index;
        p.j = b.index;
        double scale = 0.0;
        for (std::size_t k = 0; k < a.curve->s.size(); ++k) {
            const double s = a.curve->s[k];
            if (s > 1.0 + 1e-12) break;
            p.sup_distance = std::max(p.sup_distance, std::abs(a.curve->mean[k] - b.curve->at(0.5 * s)));
            scale = std::max(scale, std::abs(a.curve->mean[k]));
        }
        p.relative = scale > 0.0 ? p.sup_distance / scale : (p.sup_distance > 0.0 ? INFINITY : 0.0);
        p.flagged = p.relative > flag_threshold;
        out.pairs.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion filters

FilterReport apply_filter(std::span<const MetaorderRecord> records, const IngestionFilter& f) {
    FilterReport rep;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (f.min_child_orders && r.child_orders < *f.min_child_orders) {
            ++rep.dropped_child_orders;
        } else if (f.min_duration && !(r.T > *f.min_duration)) {
            ++rep.dropped_duration;
        } else if ((f.r_min && r.r() < *f.r_min) || (f.r_max && r.r() > *f.r_max)) {
            ++rep.dropped_rate;
        } else if ((f.R_min && r.R() < *f.R_min) || (f.R_max && r.R() > *f.R_max)) {
            ++rep.dropped_participation;
        } else if (f.closing_time && !(r.t0 + 2.0 * r.T < *f.closing_time)) {
            ++rep.dropped_close;
        } else {
            rep.kept.push_back(i);
        }
    }
    return rep;
}

IngestionFilter default_filter() {
    IngestionFilter f;
    f.min_duration = 180.0;
    f.r_min = 0.03;
    f.r_max = 0.40;
    f.R_min = 0.001;
    f.R_max = 0.20;
    f.closing_time = 17.5 * 3600.0;
    return f;
}

} // namespace himpact
