#include <doctest.h>

#include "himpact/daily_analysis.hpp"
#include "himpact/error.hpp"
#include "himpact/rng.hpp"
#include "synthetic.hpp"

#include <cmath>

using namespace himpact;

namespace {

DailyRecord from_log(const std::vector<double>& lp, const std::vector<double>& li, int side = 1) {
    DailyRecord r;
    r.id = "x";
    r.side = side;
    r.R = 0.01;
    for (double v : lp) r.close.push_back(std::exp(v));
    for (double v : li) r.index_close.push_back(std::exp(v));
    return r;
}

std::vector<double> random_walk(Rng& rng, double sd, double start = 0.0) {
    std::vector<double> v{start};
    for (std::size_t k = 0; k < kReturns; ++k) v.push_back(v.back() + sd * rng.normal());
    return v;
}

FollowUp no_flow() { return FollowUp{std::vector<double>(kDaysAfter, 0.0), std::vector<double>(kDaysAfter, 0.0)}; }

} // namespace

TEST_CASE("capm_decompose") {
    Rng rng(1);
    const auto li = random_walk(rng, 0.01, 7.0);
    const auto same = capm_decompose(from_log(li, li));
    CHECK(same.beta == doctest::Approx(1.0).epsilon(1e-14));
    for (double w : same.residuals) CHECK(std::abs(w) < 1e-15);
    CHECK(same.residuals.size() == 41);

    // slope 2 plus noise: beta inside the OLS confidence interval
    std::vector<double> lp{3.0};
    for (std::size_t k = 0; k < kReturns; ++k) lp.push_back(lp.back() + 2.0 * (li[k + 1] - li[k]) + 0.002 * rng.normal());
    const auto two = capm_decompose(from_log(lp, li));
    double sxx = 0.0;
    for (double x : two.index_returns) sxx += x * x;
    CHECK(std::abs(two.beta - 2.0) < 4.0 * 0.002 / std::sqrt(sxx));

    // shifting all log prices leaves everything unchanged
    auto shifted = lp;
    for (auto& v : shifted) v += 1.7;
    const auto sh = capm_decompose(from_log(shifted, li));
    CHECK(sh.beta == doctest::Approx(two.beta).epsilon(1e-12));
    for (std::size_t k = 0; k < kReturns; ++k) CHECK(std::abs(sh.residuals[k] - two.residuals[k]) < 1e-12);

    const std::vector<double> flat(kCloses, 6.0);
    CHECK_THROWS_AS((void)capm_decompose(from_log(lp, flat)), Error);
    auto short_rec = from_log(lp, li);
    short_rec.close.pop_back();
    CHECK_THROWS_AS((void)capm_decompose(short_rec), Error);
}

TEST_CASE("record_profile") {
    Rng rng(2);
    auto li = random_walk(rng, 0.01, 7.0);
    // flat index on day D so the jump does not leak into beta
    for (std::size_t k = kDaysBefore; k < kCloses; ++k) li[k] -= li[kDaysBefore] - li[kDaysBefore - 1];
    auto lp = li;
    const double jump = 0.003;
    for (std::size_t k = kDaysBefore; k < kCloses; ++k) lp[k] += jump;
    const auto p = record_profile(from_log(lp, li));
    CHECK(capm_decompose(from_log(lp, li)).beta == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t d = 0; d < kProfileDays; ++d) {
        CHECK(p.idiosyncratic[d] == doctest::Approx(30.0).epsilon(1e-9));
        CHECK(std::abs(p.total[d] - p.systematic[d] - p.idiosyncratic[d]) < 1e-9);
    }
    // no market move at all: systematic is identically zero
    const std::vector<double> still(kCloses, 7.0);
    auto rec = from_log(lp, li);
    rec.index_close = from_log(still, still).close;
    rec.index_close[3] *= 1.01;  // one early index move keeps the regression defined
    const auto q = record_profile(rec);
    for (std::size_t d = 0; d < kProfileDays; ++d) CHECK(q.systematic[d] == 0.0);

    const auto flipped = record_profile(from_log(lp, li, -1));
    for (std::size_t d = 0; d < kProfileDays; ++d) CHECK(flipped.total[d] == -p.total[d]);
}

TEST_CASE("postexec_profile") {
    const auto c = synth::daily_cohort(400, 0.05, 3);
    ProfileOptions opt;
    opt.n_boot = 100;
    opt.seed = 4;
    const auto p = postexec_profile(c.records, opt);
    CHECK(p.n == 400);
    CHECK(p.day.size() == kProfileDays);
    for (std::size_t d = 0; d < kProfileDays; ++d) {
        CHECK(std::abs(p.total[d] - p.systematic[d] - p.idiosyncratic[d]) < 1e-9);
        CHECK(p.idiosyncratic_band.lo[d] <= p.idiosyncratic[d] + 1e-9);
        CHECK(p.idiosyncratic_band.hi[d] >= p.idiosyncratic[d] - 1e-9);
    }
    const auto again = postexec_profile(c.records, opt);
    CHECK(again.idiosyncratic_band.lo == p.idiosyncratic_band.lo);

    auto flipped = c.records;
    for (auto& r : flipped) r.side = -r.side;
    const auto f = postexec_profile(flipped);
    for (std::size_t d = 0; d < kProfileDays; ++d) CHECK(f.total[d] == doctest::Approx(-p.total[d]).epsilon(1e-12));

    // Price moves independent of the side cancel out.
    const auto none = synth::daily_cohort(2000, 0.0, 5);
    const auto z = postexec_profile(none.records);
    for (std::size_t d = 0; d < kProfileDays; ++d) CHECK(std::abs(z.idiosyncratic[d]) < 4.0 * z.idiosyncratic_stderr[d]);

    CHECK_THROWS_AS((void)postexec_profile(std::vector<DailyRecord>{}), Error);
}

TEST_CASE("debias_profiles") {
    const auto c = synth::daily_cohort(300, 0.05, 6);
    const auto raw = postexec_profile(c.records);
    const auto same = debias_profiles(c.records, c.followups, 0.0);
    CHECK(same.idiosyncratic == raw.idiosyncratic);
    CHECK(same.total == raw.total);
    std::vector<FollowUp> empty(c.records.size(), no_flow());
    const auto quiet = debias_profiles(c.records, empty, 0.05);
    CHECK(quiet.idiosyncratic == raw.idiosyncratic);

    auto bad = c.followups;
    bad[0].sell[3] = -0.1;
    CHECK_THROWS_AS((void)debias_profiles(c.records, bad, 0.05), Error);
    CHECK_THROWS_AS((void)debias_profiles(c.records, c.followups, -1.0), Error);

    // Hand-computed single record.
    FollowUp fu = no_flow();
    fu.buy[0] = 0.04;
    fu.sell[1] = 0.01;
    const auto base = record_profile(c.records[0]);
    const auto one = debias_record(c.records[0], fu, 0.1);
    const double eps = c.records[0].side * 1e4;
    CHECK(one.total[0] == doctest::Approx(base.total[0]).epsilon(1e-12));
    CHECK(one.total[1] == doctest::Approx(base.total[1] - eps * 0.1 * 0.2).epsilon(1e-12));
    CHECK(one.total[5] == doctest::Approx(base.total[5] - eps * 0.1 * (0.2 - 0.1)).epsilon(1e-12));
    for (std::size_t d = 0; d < kProfileDays; ++d) {
        CHECK(std::abs(one.total[d] - one.systematic[d] - one.idiosyncratic[d]) < 1e-9);
    }
}

TEST_CASE("debiasing closes the loop") {
    const auto c = synth::daily_cohort(3000, 0.05, 8);
    ProfileOptions opt;
    opt.n_boot = 200;
    opt.seed = 1;
    const auto raw = postexec_profile(c.records, opt);
    const std::size_t last = kProfileDays - 1;
    CHECK(raw.idiosyncratic_band.lo[last] > 0.0);  // drift from follow-up flow
    const auto fitted = fit_sqrt_model(c.records);
    CHECK(std::abs(fitted.a / 0.05 - 1.0) < 0.05);
    const auto deb = debias_profiles(c.records, c.followups, fitted.a, 0.5, opt);
    CHECK(deb.idiosyncratic_band.lo[last] <= 0.0);
    CHECK(deb.idiosyncratic_band.hi[last] >= 0.0);

    // A nearby exponent gives a profile within the band width.
    const auto f4 = fit_sqrt_model(c.records, 0.4);
    const auto d4 = debias_profiles(c.records, c.followups, f4.a, 0.4, opt);
    const double width = deb.idiosyncratic_band.hi[last] - deb.idiosyncratic_band.lo[last];
    CHECK(std::abs(d4.idiosyncratic[last] - deb.idiosyncratic[last]) < width);
}

TEST_CASE("fit_sqrt_model") {
    std::vector<double> R, y;
    Rng rng(10);
    for (int i = 0; i < 100; ++i) {
        R.push_back(0.001 + 0.1 * rng.uniform());
        y.push_back(0.003 * std::sqrt(R.back()));
    }
    CHECK(fit_sqrt_model(R, y).a == doctest::Approx(0.003).epsilon(1e-14));

    R.clear();
    y.clear();
    for (int i = 0; i < 10000; ++i) {
        R.push_back(0.001 + 0.1 * rng.uniform());
        y.push_back(0.003 * std::sqrt(R.back()) + 0.0005 * rng.normal());
    }
    const auto f = fit_sqrt_model(R, y);
    CHECK(std::abs(f.a / 0.003 - 1.0) < 0.05);
    CHECK(f.stderr_ > 0.0);
    CHECK_THROWS_AS((void)fit_sqrt_model(R, y, 0.3), Error);
    R[5] = 0.0;
    CHECK_THROWS_AS((void)fit_sqrt_model(R, y), Error);
    CHECK_THROWS_AS((void)fit_sqrt_model(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("participation_autocorr") {
    Rng rng(12);
    std::vector<std::vector<double>> iid(20, std::vector<double>(250));
    for (auto& s : iid) {
        for (auto& v : s) v = rng.normal();
    }
    const auto a = participation_autocorr(iid, 20, 200, 3);
    CHECK(a.lag.size() == 20);
    for (std::size_t l = 0; l < 20; ++l) {
        CHECK(std::abs(a.value[l]) < 4.0 / std::sqrt(static_cast<double>(a.pairs[l])));
        CHECK(a.q25[l] <= a.q50[l]);
        CHECK(a.q50[l] <= a.q75[l]);
    }
    const auto again = participation_autocorr(iid, 20, 200, 3);
    CHECK(again.q25 == a.q25);
    CHECK(again.q75 == a.q75);

    std::vector<std::vector<double>> ar(20, std::vector<double>(500));
    for (auto& s : ar) {
        double x = 0.0;
        for (auto& v : s) {
            x = 0.5 * x + rng.normal();
            v = x;
        }
    }
    const auto b = participation_autocorr(ar, 5, 0, 0);
    CHECK(b.value[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(b.value[1] == doctest::Approx(0.25).epsilon(0.15));
    CHECK(b.value[2] == doctest::Approx(0.125).epsilon(0.35));

    CHECK_THROWS_AS((void)participation_autocorr({std::vector<double>(50, 1.0)}, 5, 10, 1), Error);
    CHECK_THROWS_AS((void)participation_autocorr({std::vector<double>(5, 1.0)}, 5, 10, 1), Error);
}

TEST_CASE("assemble_daily") {
    std::map<std::string, DatedSeries> closes, index;
    DatedSeries s, ix;
    for (int d = 0; d < 60; ++d) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2021-%02d-%02d", 1 + d / 28, 1 + d % 28);
        s.date.push_back(buf);
        s.value.push_back(100.0 + d);
        ix.date.push_back(buf);
        ix.value.push_back(1000.0 + 2.0 * d + (d % 3));
    }
    closes["AAA"] = s;
    index["IDX"] = ix;
    const std::map<std::string, std::string> index_of{{"AAA", "IDX"}};
    std::vector<DailyMetaorder> m{
        {"m1", "AAA", s.date[25], 1, 0.02},
        {"m2", "AAA", s.date[27], 1, 0.01},
        {"m3", "AAA", s.date[27], -1, 0.03},
        {"m4", "AAA", s.date[5], 1, 0.01},   // not enough history
        {"m5", "BBB", s.date[30], 1, 0.01},  // unknown instrument
    };
    const auto d = assemble_daily(m, closes, index, index_of);
    CHECK(d.records.size() == 3);
    CHECK(d.notes.size() == 2);
    const auto& r = d.records[0];
    CHECK(r.close.front() == s.value[4]);
    CHECK(r.close.back() == s.value[45]);
    CHECK(d.followups[0].buy[1] == 0.01);   // day D+2
    CHECK(d.followups[0].sell[1] == 0.03);
    CHECK(d.followups[0].buy[0] == 0.0);

    const auto part = daily_participation(m, closes);
    CHECK(part.at("AAA")[25] == 0.02);
    CHECK(part.at("AAA")[27] == doctest::Approx(-0.02));
}
