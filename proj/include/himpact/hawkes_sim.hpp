#pragma once

// Multivariate Hawkes simulation by Ogata thinning, expected counts through the
// renewal formula E[N_t] = h(t) + (Psi * h)(t), and the Monte Carlo impact
// oracle for the impulsive-HIM price model.

#include "himpact/him_spec.hpp"
#include "himpact/kernels.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace himpact {

/// Piecewise-linear function of time with constant extension outside its knots.
/// Repeated knot times encode jumps (left value, then right value).
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> times, std::vector<double> values);

    [[nodiscard]] static PiecewiseLinear constant(double value);
    /// value on [start, end), zero elsewhere.
    [[nodiscard]] static PiecewiseLinear box(double start, double end, double value);

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double integral(double a, double b) const;
    /// Smallest knot strictly greater than t (infinity if none).
    [[nodiscard]] double next_knot(double t) const;
    /// Upper bound of the function on [a, b].
    [[nodiscard]] double max_on(double a, double b) const;
    [[nodiscard]] double min_value() const;

    [[nodiscard]] std::span<const double> times() const { return times_; }
    [[nodiscard]] std::span<const double> values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// lambda_i(t) = mu_i(t) + sum_j int_[0,t) phi_ij(t - s) dN_j(s).
struct HawkesSpec {
    std::size_t dim{1};
    std::vector<PiecewiseLinear> mu;
    /// Row-major dim x dim; kernels[i * dim + j] is the effect of j-events on i.
    std::vector<std::optional<Kernel>> kernels;
    double horizon{1.0};
    /// Grid step used to tabulate power-law kernels inside the simulator.
    double kernel_dt{1e-3};

    [[nodiscard]] const std::optional<Kernel>& kernel(std::size_t i, std::size_t j) const {
        return kernels[i * dim + j];
    }
    [[nodiscard]] std::vector<double> norm_matrix() const;
    void validate() const;

    /// Two-dimensional up/down price model with a single cross kernel.
    [[nodiscard]] static HawkesSpec cross(double mu, const Kernel& phi, double horizon);
};

struct Event {
    double time{0.0};
    std::size_t dim{0};
};

struct EventStream {
    std::vector<Event> events;
    double horizon{0.0};

    [[nodiscard]] std::size_t count(std::size_t dim, double until) const;
};

/// P_t = J+_t - J-_t as a step function.
struct PricePath {
    std::vector<double> jump_times;
    std::vector<long> values;  // value right after each jump

    [[nodiscard]] long at(double t) const;
};

struct SimulationStats {
    std::size_t proposals{0};
    std::size_t accepted{0};
    /// Mass of power-law kernels neglected beyond their tabulated horizon.
    double truncated_mass_bound{0.0};
};

/// Ogata thinning sampler. Kernel tables are built once; run() is const and
/// can be called concurrently for different paths.
class HawkesSimulator {
public:
    HawkesSimulator(HawkesSpec spec, std::vector<PiecewiseLinear> exogenous);

    [[nodiscard]] EventStream run(std::uint64_t seed, std::uint64_t path_index, SimulationStats* stats = nullptr) const;
    [[nodiscard]] const HawkesSpec& spec() const { return spec_; }

private:
    struct Excitation {
        bool active{false};
        bool exponential{false};
        double alpha{0.0};
        double beta{0.0};
        SampledFunction table;
        std::optional<Kernel> analytic;
    };

    HawkesSpec spec_;
    std::vector<PiecewiseLinear> exogenous_;
    std::vector<Excitation> kernels_;
    // Max of mu_i + exogenous_i over each block of width block_; the thinning
    // bound is rebuilt at block boundaries and after every event.
    double block_{1.0};
    std::vector<double> envelope_;
};

/// Paths of the Monte Carlo drivers are reduced in blocks of this many path
/// indices, in block order.
inline constexpr std::size_t kMonteCarloBlock = 256;

/// Exact Ogata-thinning sample. `exogenous` holds one extra intensity per
/// dimension (empty means none). Seed and path index fix the random stream.
[[nodiscard]] EventStream simulate(const HawkesSpec& spec, std::span<const PiecewiseLinear> exogenous,
                                   std::uint64_t seed, std::uint64_t path_index = 0,
                                   SimulationStats* stats = nullptr);

struct ExpectedCountsOptions {
    double dt{1e-2};
    SeriesOptions series{};
};

/// E[N_i(t)] at each requested time, one vector per dimension.
[[nodiscard]] std::vector<std::vector<double>> expected_counts(const HawkesSpec& spec,
                                                               std::span<const PiecewiseLinear> exogenous,
                                                               std::span<const double> t_grid,
                                                               const ExpectedCountsOptions& options = {});

[[nodiscard]] PricePath price_path(const EventStream& stream, std::size_t up_dim = 0, std::size_t down_dim = 1);

/// Monte Carlo estimate with per-point standard errors.
struct McCurve {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> stderr_;
    std::size_t n_paths{0};
};

struct MonteCarloOptions {
    double horizon{0.0};          // 0: last grid time
    double exogenous_dt{1e-2};    // grid for the deterministic downward exogenous term
    double kernel_dt{1e-3};
};

/// The two-dimensional Hawkes model plus exogenous intensities of an impulsive-HIM spec.
struct HimSimulationModel {
    HawkesSpec hawkes;
    std::vector<PiecewiseLinear> exogenous;
};

[[nodiscard]] HimSimulationModel build_simulation_model(const HimSpec& him, double horizon,
                                                        const MonteCarloOptions& options = {});

/// Pathwise mean of P_t over n_paths simulations; paths run in parallel and are
/// reduced in fixed blocks of path indices, so the result is independent of
/// the thread count.
[[nodiscard]] McCurve monte_carlo_impact(const HimSpec& him, std::size_t n_paths, std::span<const double> t_grid,
                                         std::uint64_t seed, const MonteCarloOptions& options = {});

/// Monte Carlo means of the counting processes (for checking expected_counts).
[[nodiscard]] std::vector<McCurve> monte_carlo_counts(const HawkesSpec& spec,
                                                      std::span<const PiecewiseLinear> exogenous,
                                                      std::size_t n_paths, std::span<const double> t_grid,
                                                      std::uint64_t seed);

namespace reference {

/// Single-threaded path loop with the same block reduction order.
[[nodiscard]] McCurve monte_carlo_impact(const HimSpec& him, std::size_t n_paths, std::span<const double> t_grid,
                                         std::uint64_t seed, const MonteCarloOptions& options = {});

} // namespace reference

} // namespace himpact
