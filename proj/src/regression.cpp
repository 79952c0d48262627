#include "himpact/error.hpp"
#include "himpact/impact_estimation.hpp"
#include "himpact/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace himpact {

Loss parse_loss(std::string_view name) {
    if (name == "L1" || name == "l1") return Loss::L1;
    if (name == "L2" || name == "l2") return Loss::L2;
    if (name == "loglog") return Loss::loglog;
    fail("invalid_argument", "unknown loss '" + std::string(name) + "'");
}

std::string loss_name(Loss loss) {
    switch (loss) {
    case Loss::L1: return "L1";
    case Loss::L2: return "L2";
    case Loss::loglog: return "loglog";
    }
    return "?";
}

double weighted_median(std::span<const double> v, std::span<const double> w) {
    require(v.size() == w.size() && !v.empty(), "weighted_median: size mismatch");
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double acc = 0.0;
    for (std::size_t i : idx) {
        acc += w[i];
        if (acc >= 0.5 * total) return v[i];
    }
    return v[idx.back()];
}

namespace {

struct Design {
    std::size_t n{0};
    std::size_t m{0};
    std::vector<double> logx;  // column-major, m columns of n
};

// log y = c0 + sum c_i log x_i over rows with y > 0.
bool loglog_fit(std::span<const double> y, const Design& d, double& a, std::vector<double>& gamma,
                std::size_t& used) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < d.n; ++j) {
        if (y[j] > 0.0) rows.push_back(j);
    }
    used = rows.size();
    if (rows.size() < d.m + 1) return false;
    Eigen::MatrixXd A(rows.size(), d.m + 1);
    Eigen::VectorXd b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        A(static_cast<Eigen::Index>(r), 0) = 1.0;
        for (std::size_t i = 0; i < d.m; ++i) {
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i + 1)) = d.logx[i * d.n + rows[r]];
        }
        b(static_cast<Eigen::Index>(r)) = std::log(y[rows[r]]);
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    a = std::exp(c(0));
    gamma.resize(d.m);
    for (std::size_t i = 0; i < d.m; ++i) gamma[i] = c(static_cast<Eigen::Index>(i + 1));
    return true;
}

class Profile {
public:
    Profile(std::span<const double> y, const Design& d, Loss loss) : y_(y), d_(d), loss_(loss), model_(d.n), ratio_(d.n) {}

    // Model values prod x^gamma for the given exponents.
    void evaluate_model(const std::vector<double>& gamma) {
        for (std::size_t j = 0; j < d_.n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d_.m; ++i) s += gamma[i] * d_.logx[i * d_.n + j];
            model_[j] = std::exp(s);
        }
    }

    // Optimal prefactor for the current model values.
    double best_a() {
        if (loss_ == Loss::L2) {
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j < d_.n; ++j) {
                num += y_[j] * model_[j];
                den += model_[j] * model_[j];
            }
            return num / den;
        }
        for (std::size_t j = 0; j < d_.n; ++j) ratio_[j] = y_[j] / model_[j];
        return weighted_median(ratio_, model_);
    }

    double loss_at(double a) const {
        double s = 0.0;
        for (std::size_t j = 0; j < d_.n; ++j) {
            const double r = y_[j] - a * model_[j];
            s += loss_ == Loss::L2 ? r * r : std::abs(r);
        }
        return s / static_cast<double>(d_.n);
    }

    double operator()(const std::vector<double>& gamma) {
        evaluate_model(gamma);
        return loss_at(best_a());
    }

private:
    std::span<const double> y_;
    const Design& d_;
    Loss loss_;
    std::vector<double> model_;
    std::vector<double> ratio_;
};

} // namespace

RegressionResult direct_regression(std::span<const double> y, const std::vector<std::vector<double>>& x, Loss loss,
                                   const RegressionOptions& options) {
    const std::size_t n = y.size();
    const std::size_t m = x.size();
    require(m >= 1, "direct_regression: need at least one variable");
    require(options.gamma_lo < options.gamma_hi, "direct_regression: empty exponent box");
    if (n < m + 1) fail("insufficient_data", "direct_regression: fewer records than parameters");
    Design d;
    d.n = n;
    d.m = m;
    d.logx.resize(n * m);
    for (std::size_t i = 0; i < m; ++i) {
        require(x[i].size() == n, "direct_regression: variable length must match responses");
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = x[i][j];
            require(std::isfinite(v) && v > 0.0, "direct_regression: variables must be finite and > 0");
            d.logx[i * n + j] = std::log(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(lo < hi)) fail("invalid_argument", "direct_regression: degenerate design (variable " + std::to_string(i) + " is constant)");
    }
    for (double v : y) require(std::isfinite(v), "direct_regression: non-finite response");

    RegressionResult res;
    res.loss = loss;
    res.n = n;

    if (loss == Loss::loglog) {
        std::size_t used = 0;
        if (!loglog_fit(y, d, res.a, res.gamma, used)) {
            fail("insufficient_data", "direct_regression: too few positive responses for the loglog fit");
        }
        res.dropped = n - used;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double lm = std::log(res.a);
            for (std::size_t i = 0; i < m; ++i) lm += res.gamma[i] * d.logx[i * n + j];
            res.residuals.push_back(y[j] - std::exp(lm));
            if (y[j] > 0.0) s += (std::log(y[j]) - lm) * (std::log(y[j]) - lm);
        }
        res.loss_value = s / static_cast<double>(used);
        if (res.dropped > 0) {
            std::ostringstream msg;
            msg << res.dropped << " of " << n << " records dropped (non-positive response)";
            res.diagnostics = msg.str();
        }
        return res;
    }

    // Start from the loglog fit when it exists.
    std::vector<double> gamma(m, 0.5);
    {
        double a0 = 0.0;
        std::vector<double> g0;
        std::size_t used = 0;
        if (loglog_fit(y, d, a0, g0, used)) {
            for (std::size_t i = 0; i < m; ++i) {
                if (std::isfinite(g0[i])) gamma[i] = std::clamp(g0[i], options.gamma_lo, options.gamma_hi);
            }
        }
    }
    for (auto& g : gamma) g = std::clamp(g, options.gamma_lo, options.gamma_hi);

    Profile profile(y, d, loss);
    double best = profile(gamma);
    const double box = options.gamma_hi - options.gamma_lo;
    double last_move = box;
    res.converged = false;
    for (std::size_t cycle = 0; cycle < options.max_cycles; ++cycle) {
        const double w = std::max({box * std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(cycle, 60))),
                                   4.0 * last_move, 1e-9});
        double move = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double lo = std::max(options.gamma_lo, gamma[i] - w);
            const double hi = std::min(options.gamma_hi, gamma[i] + w);
            auto trial = gamma;
            auto f = [&](double g) {
                trial[i] = g;
                return profile(trial);
            };
            const auto r = cycle == 0 ? scan_then_golden(f, lo, hi, 40, options.tol)
                                      : scan_then_golden(f, lo, hi, 8, options.tol);
            if (r.fx <= best) {
                move = std::max(move, std::abs(r.x - gamma[i]));
                gamma[i] = r.x;
                best = r.fx;
            }
        }
        last_move = move;
        res.cycles = cycle + 1;
        if (cycle > 0 && move <= options.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) {
        std::ostringstream msg;
        msg << "coordinate descent hit max_cycles=" << options.max_cycles << " (last move " << last_move << ")";
        res.diagnostics = msg.str();
    }

    res.gamma = gamma;
    profile.evaluate_model(gamma);
    res.a = profile.best_a();
    res.loss_value = profile.loss_at(res.a);
    for (std::size_t j = 0; j < n; ++j) {
        double lm = 0.0;
        for (std::size_t i = 0; i < m; ++i) lm += gamma[i] * d.logx[i * n + j];
        res.residuals.push_back(y[j] - res.a * std::exp(lm));
    }
    return res;
}

RegressionResult direct_regression(const Dataset& data, const std::vector<Extractor>& x, Loss loss,
                                   const RegressionOptions& options, ResponseTransform transform) {
    std::vector<double> y;
    std::vector<std::vector<double>> cols(x.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto& rec = data.records[j];
        const auto& ser = data.series[j];
        if (!ser.covers(rec.t0, rec.t0 + rec.T)) {
            fail("insufficient_data", "direct_regression: record " + rec.id + " has no price at t0 + T");
        }
        y.push_back(signed_response(rec, ser, rec.t0 + rec.T, transform));
        for (std::size_t i = 0; i < x.size(); ++i) cols[i].push_back(x[i](rec));
    }
    return direct_regression(y, cols, loss, options);
}

} // namespace himpact
