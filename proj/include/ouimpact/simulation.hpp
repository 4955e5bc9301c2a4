#pragma once

/**
 * @file simulation.hpp
 * @brief Ornstein-Uhlenbeck path sampling, strategy integration and a
 *        deterministic parallel Monte Carlo engine.
 *
 * Every normal shock is a pure function of (seed, path_index, step), so a run
 * gives bit-identical results for any worker count and any path can be
 * regenerated on its own. Competing policies evaluated with the same seed see
 * the same price paths (common random numbers).
 */

#include "ouimpact/analytic_core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ouimpact {

/// Uniform grid t0 < t0 + h < ... < t1 with n_steps intervals.
class TimeGrid {
public:
    TimeGrid(double t0, double t1, std::size_t n_steps);

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    double step() const noexcept { return step_; }

    /// Node k, computed as fma(k, h, t0); the last node is t1 exactly.
    double node(std::size_t k) const noexcept;

private:
    double t0_;
    double t1_;
    std::size_t n_steps_;
    double step_;
};

struct PathSample {
    TimeGrid grid;
    std::vector<double> prices;  ///< n_steps + 1 entries, prices[0] = S0
    std::vector<double> shocks;  ///< n_steps standard normal draws
};

struct StrategyTrace {
    std::vector<double> rates;      ///< phi at each node (n_steps + 1 entries)
    std::vector<double> positions;  ///< Phi at each node, positions[0] = Phi0
    double wealth_riemann = 0.0;    ///< Phi0 (S_T - S0) + sum phi_k (S_T - S_k) h - sum phi_k^2 h / (2 delta)
    double wealth_ito = 0.0;        ///< sum Phi_k (S_{k+1} - S_k) - sum phi_k^2 h / (2 delta)
};

struct MonteCarloReport {
    std::size_t n_paths = 0;
    double estimate = 0.0;   ///< sample mean of -exp(-wealth_ito)
    double std_error = 0.0;  ///< sample standard deviation / sqrt(n_paths)
    std::uint64_t seed = 0;
    std::string config_digest;  ///< digest of (params, grid, n_paths, seed)
};

/// Trading rate as a function of (t, price, position).
using Policy = std::function<double(double t, double price, double position)>;

/// Optimal feedback policy. When a grid is supplied, the feedback coefficients
/// are precomputed at its nodes and reused whenever t hits a node exactly.
Policy make_optimal_policy(const ModelParams& params);
Policy make_optimal_policy(const ModelParams& params, const TimeGrid& grid);
Policy make_zero_policy();

/// A named transformation of the optimal policy used in perturbation studies.
struct PolicyTransform {
    std::string label;
    std::function<Policy(const Policy& base, const ModelParams& params)> apply;
};

PolicyTransform scale_transform(double factor);
/// Evaluates the base policy on a clock lagging by `lag` (clamped at 0).
PolicyTransform clock_lag_transform(double lag);
/// Constant rate equal to the base policy's rate at (0, S0, Phi0).
PolicyTransform frozen_rate_transform();
/// x0.5, x1.5, a clock lag of T/10 and the frozen initial rate.
std::vector<PolicyTransform> default_perturbations(const ModelParams& params);

/// Exact OU transition S_{k+1} = mu + (S_k - mu) e^{-h} + eps_k sqrt((1 - e^{-2h}) / 2).
PathSample sample_ou_path(const ModelParams& params, const TimeGrid& grid, std::uint64_t seed,
                          std::uint64_t path_index);
/// Same transition with every shock set to zero.
PathSample mean_ou_path(const ModelParams& params, const TimeGrid& grid);

/// Explicit Euler on the position, Phi_{k+1} = Phi_k + phi_k h.
StrategyTrace integrate_strategy(const ModelParams& params, const PathSample& path,
                                 const Policy& policy);

/// workers == 0 selects std::thread::hardware_concurrency().
MonteCarloReport monte_carlo_value(const ModelParams& params, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed, const Policy& policy,
                                   unsigned workers = 0);

struct PathOutcome {
    double wealth = 0.0;
    double utility = 0.0;
};

/// Per-path terminal wealth and utility for each policy, all on the same
/// paths. Result is indexed [policy][path].
std::vector<std::vector<PathOutcome>> evaluate_policies(const ModelParams& params,
                                                        const TimeGrid& grid, std::size_t n_paths,
                                                        std::uint64_t seed,
                                                        std::span<const Policy> policies,
                                                        unsigned workers = 0);

/// Mean and standard error of a sample, summed in index order.
MonteCarloReport summarize(std::span<const double> utilities, std::uint64_t seed,
                           std::string config_digest);

struct PerturbationOutcome {
    std::string label;
    MonteCarloReport report;
    double paired_difference = 0.0;  ///< mean of (perturbed - optimal) utility
    double paired_std_error = 0.0;
};

struct PerturbationStudy {
    MonteCarloReport optimal;
    std::vector<PerturbationOutcome> perturbed;
};

PerturbationStudy perturbation_study(const ModelParams& params, const TimeGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed,
                                     std::span<const PolicyTransform> perturbations,
                                     unsigned workers = 0);

struct FrictionlessDeviation {
    double deviation = 0.0;   ///< sup over [0.1T, 0.9T] of |Phi_t - (1 + T - t)(mu - S_t)|
    double target_sup = 0.0;  ///< sup over the same window of |(1 + T - t)(mu - S_t)|
};

/// Runs the optimal policy on one path (path_index 0) and measures the
/// distance to the frictionless target. Requires delta >= 1e3.
FrictionlessDeviation frictionless_limit_check(const ModelParams& params, const TimeGrid& grid,
                                               std::uint64_t seed);
FrictionlessDeviation frictionless_limit_check(const ModelParams& params, const PathSample& path);

/// Stable digest of the engine inputs.
std::string engine_digest(const ModelParams& params, const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed);

}  // namespace ouimpact
