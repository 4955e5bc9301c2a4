#include "ouimpact/simulation.hpp"

#include "ouimpact/digest.hpp"
#include "ouimpact/errors.hpp"
#include "ouimpact/philox.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

namespace ouimpact {

// ===========================================================================
// TimeGrid
// ===========================================================================

TimeGrid::TimeGrid(double t0, double t1, std::size_t n_steps)
    : t0_(t0), t1_(t1), n_steps_(n_steps), step_(0.0) {
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw DomainError("grid bounds must be finite");
    if (!(t1 > t0)) throw DomainError("grid needs t1 > t0");
    if (n_steps < 1) throw DomainError("grid needs n_steps >= 1");
    step_ = (t1 - t0) / static_cast<double>(n_steps);
    if (!(step_ > 0.0)) throw DomainError("grid step underflows to zero");
}

double TimeGrid::node(std::size_t k) const noexcept {
    if (k >= n_steps_) return t1_;
    return std::fma(static_cast<double>(k), step_, t0_);
}

// ===========================================================================
// Policies
// ===========================================================================

namespace {

// Matches t to a grid node when it lies within this fraction of a step.
constexpr double kNodeMatchTolerance = 1e-9;

class CachedOptimalPolicy {
public:
    CachedOptimalPolicy(const ModelParams& params, const TimeGrid& grid)
        : params_(params), grid_(grid), coefficients_(grid.n_steps()) {
        for (std::size_t k = 0; k < grid.n_steps(); ++k) {
            coefficients_[k] = feedback_coefficients(params.delta, params.horizon - grid.node(k));
        }
    }

    double operator()(double t, double price, double position) const {
        const double pos = (t - grid_.t0()) / grid_.step();
        if (pos >= 0.0 && pos <= static_cast<double>(grid_.n_steps()) + 0.5) {
            const auto k = static_cast<std::size_t>(std::llround(pos));
            if (std::fabs(pos - static_cast<double>(k)) <= kNodeMatchTolerance) {
                if (k >= grid_.n_steps()) return 0.0;
                const FeedbackCoefficients& fc = coefficients_[k];
                return params_.delta * (fc.target(params_.mu - price) - position) / fc.denom;
            }
        }
        return feedback_rate(params_, t, price, position);
    }

private:
    ModelParams params_;
    TimeGrid grid_;
    std::vector<FeedbackCoefficients> coefficients_;
};

std::string label_number(double v) { return format_double(v); }

}  // namespace

Policy make_optimal_policy(const ModelParams& params) {
    params.validate();
    return [params](double t, double price, double position) {
        return feedback_rate(params, t, price, position);
    };
}

Policy make_optimal_policy(const ModelParams& params, const TimeGrid& grid) {
    params.validate();
    auto cached = std::make_shared<const CachedOptimalPolicy>(params, grid);
    return [cached](double t, double price, double position) { return (*cached)(t, price, position); };
}

Policy make_zero_policy() {
    return [](double, double, double) { return 0.0; };
}

PolicyTransform scale_transform(double factor) {
    return {"scale_" + label_number(factor), [factor](const Policy& base, const ModelParams&) -> Policy {
                return [base, factor](double t, double s, double p) { return factor * base(t, s, p); };
            }};
}

PolicyTransform clock_lag_transform(double lag) {
    return {"clock_lag_" + label_number(lag), [lag](const Policy& base, const ModelParams&) -> Policy {
                return [base, lag](double t, double s, double p) {
                    return base(std::max(t - lag, 0.0), s, p);
                };
            }};
}

PolicyTransform frozen_rate_transform() {
    return {"frozen_initial_rate", [](const Policy& base, const ModelParams& params) -> Policy {
                const double rate = base(0.0, params.s0, params.phi0);
                return [rate](double, double, double) { return rate; };
            }};
}

std::vector<PolicyTransform> default_perturbations(const ModelParams& params) {
    return {scale_transform(0.5), scale_transform(1.5), clock_lag_transform(0.1 * params.horizon),
            frozen_rate_transform()};
}

// ===========================================================================
// Paths and strategy integration
// ===========================================================================

namespace {

void check_grid(const ModelParams& params, const TimeGrid& grid) {
    params.validate();
    if (grid.t0() != 0.0 || grid.t1() != params.horizon) {
        throw DomainError("time grid must span [0, horizon]");
    }
}

void fill_ou_path(const ModelParams& params, const TimeGrid& grid, std::uint64_t seed,
                  std::uint64_t path_index, bool zero_shocks, std::span<double> prices,
                  std::span<double> shocks) {
    const std::size_t n = grid.n_steps();
    const double h = grid.step();
    const double decay = std::exp(-h);
    const double scale = std::sqrt(-std::expm1(-2.0 * h) / 2.0);
    if (zero_shocks) {
        std::fill(shocks.begin(), shocks.end(), 0.0);
    } else {
        for (std::size_t k = 0; k < n; k += 2) {
            const auto [z0, z1] = normal_pair(seed, path_index, k / 2);
            shocks[k] = z0;
            if (k + 1 < n) shocks[k + 1] = z1;
        }
    }
    prices[0] = params.s0;
    for (std::size_t k = 0; k < n; ++k) {
        prices[k + 1] = params.mu + (prices[k] - params.mu) * decay + shocks[k] * scale;
    }
}

struct Wealth {
    double riemann = 0.0;
    double ito = 0.0;
};

template <bool Record>
Wealth integrate_path(const ModelParams& params, const TimeGrid& grid, std::span<const double> prices,
                      const Policy& policy, StrategyTrace* trace) {
    const std::size_t n = grid.n_steps();
    const double h = grid.step();
    const double terminal = prices[n];
    double position = params.phi0;
    double ito = 0.0;
    double riemann = 0.0;
    double impact = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double rate = policy(grid.node(k), prices[k], position);
        if (!std::isfinite(rate)) {
            throw IntegrationError("policy returned a non-finite rate at step " + std::to_string(k), k);
        }
        if constexpr (Record) {
            trace->rates[k] = rate;
            trace->positions[k] = position;
        }
        ito += position * (prices[k + 1] - prices[k]);
        riemann += rate * (terminal - prices[k]);
        impact += rate * rate;
        position += rate * h;
    }
    if constexpr (Record) {
        const double last = policy(grid.t1(), terminal, position);
        if (!std::isfinite(last)) {
            throw IntegrationError("policy returned a non-finite rate at maturity", n);
        }
        trace->rates[n] = last;
        trace->positions[n] = position;
    }
    const double cost = impact * h / (2.0 * params.delta);
    return {params.phi0 * (terminal - prices[0]) + riemann * h - cost, ito - cost};
}

}  // namespace

PathSample sample_ou_path(const ModelParams& params, const TimeGrid& grid, std::uint64_t seed,
                          std::uint64_t path_index) {
    check_grid(params, grid);
    PathSample path{grid, std::vector<double>(grid.n_steps() + 1), std::vector<double>(grid.n_steps())};
    fill_ou_path(params, grid, seed, path_index, false, path.prices, path.shocks);
    return path;
}

PathSample mean_ou_path(const ModelParams& params, const TimeGrid& grid) {
    check_grid(params, grid);
    PathSample path{grid, std::vector<double>(grid.n_steps() + 1), std::vector<double>(grid.n_steps())};
    fill_ou_path(params, grid, 0, 0, true, path.prices, path.shocks);
    return path;
}

StrategyTrace integrate_strategy(const ModelParams& params, const PathSample& path,
                                 const Policy& policy) {
    check_grid(params, path.grid);
    if (path.prices.size() != path.grid.n_steps() + 1) {
        throw DomainError("path has the wrong number of prices for its grid");
    }
    StrategyTrace trace;
    trace.rates.resize(path.prices.size());
    trace.positions.resize(path.prices.size());
    const Wealth w = integrate_path<true>(params, path.grid, path.prices, policy, &trace);
    trace.wealth_riemann = w.riemann;
    trace.wealth_ito = w.ito;
    return trace;
}

// ===========================================================================
// Monte Carlo engine
// ===========================================================================

std::string engine_digest(const ModelParams& params, const TimeGrid& grid, std::size_t n_paths,
                          std::uint64_t seed) {
    std::string canon;
    canon += "mu=" + format_double(params.mu);
    canon += ";s0=" + format_double(params.s0);
    canon += ";delta=" + format_double(params.delta);
    canon += ";horizon=" + format_double(params.horizon);
    canon += ";phi0=" + format_double(params.phi0);
    canon += ";t0=" + format_double(grid.t0());
    canon += ";t1=" + format_double(grid.t1());
    canon += ";n_steps=" + std::to_string(grid.n_steps());
    canon += ";n_paths=" + std::to_string(n_paths);
    canon += ";seed=" + std::to_string(seed);
    return fnv1a_hex(canon);
}

MonteCarloReport summarize(std::span<const double> utilities, std::uint64_t seed,
                           std::string config_digest) {
    const std::size_t n = utilities.size();
    if (n == 0) throw DomainError("cannot summarize an empty sample");
    // Neumaier-compensated sum in index order.
    double sum = 0.0;
    double comp = 0.0;
    for (double u : utilities) {
        const double t = sum + u;
        comp += std::fabs(sum) >= std::fabs(u) ? (sum - t) + u : (u - t) + sum;
        sum = t;
    }
    const double mean = (sum + comp) / static_cast<double>(n);
    double ss = 0.0;
    for (double u : utilities) ss += (u - mean) * (u - mean);
    MonteCarloReport report;
    report.n_paths = n;
    report.estimate = mean;
    report.std_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    report.seed = seed;
    report.config_digest = std::move(config_digest);
    return report;
}

std::vector<std::vector<PathOutcome>> evaluate_policies(const ModelParams& params,
                                                        const TimeGrid& grid, std::size_t n_paths,
                                                        std::uint64_t seed,
                                                        std::span<const Policy> policies,
                                                        unsigned workers) {
    check_grid(params, grid);
    if (n_paths < 1) throw DomainError("n_paths must be >= 1");
    if (policies.empty()) throw DomainError("at least one policy is required");
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_paths));

    std::vector<std::vector<PathOutcome>> results(policies.size(), std::vector<PathOutcome>(n_paths));
    constexpr std::size_t kChunk = 64;
    std::atomic<std::size_t> next{0};

    std::mutex error_mutex;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error;

    auto work = [&] {
        std::vector<double> prices(grid.n_steps() + 1);
        std::vector<double> shocks(grid.n_steps());
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n_paths) return;
            const std::size_t end = std::min(n_paths, begin + kChunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    fill_ou_path(params, grid, seed, i, false, prices, shocks);
                    for (std::size_t p = 0; p < policies.size(); ++p) {
                        const Wealth w = integrate_path<false>(params, grid, prices, policies[p], nullptr);
                        const double utility = -std::exp(-w.ito);
                        if (!std::isfinite(utility)) {
                            throw MonteCarloError("utility overflow on path " + std::to_string(i) +
                                                      " (wealth " + format_double(w.ito) + ")",
                                                  i);
                        }
                        results[p][i] = {w.ito, utility};
                    }
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

namespace {

std::vector<double> utilities_of(const std::vector<PathOutcome>& outcomes) {
    std::vector<double> u(outcomes.size());
    std::transform(outcomes.begin(), outcomes.end(), u.begin(), [](const PathOutcome& o) { return o.utility; });
    return u;
}

}  // namespace

MonteCarloReport monte_carlo_value(const ModelParams& params, const TimeGrid& grid,
                                   std::size_t n_paths, std::uint64_t seed, const Policy& policy,
                                   unsigned workers) {
    if (n_paths < 2) throw DomainError("n_paths must be >= 2");
    const Policy policies[] = {policy};
    const auto results = evaluate_policies(params, grid, n_paths, seed, policies, workers);
    return summarize(utilities_of(results[0]), seed, engine_digest(params, grid, n_paths, seed));
}

PerturbationStudy perturbation_study(const ModelParams& params, const TimeGrid& grid,
                                     std::size_t n_paths, std::uint64_t seed,
                                     std::span<const PolicyTransform> perturbations,
                                     unsigned workers) {
    if (n_paths < 2) throw DomainError("n_paths must be >= 2");
    if (perturbations.empty()) throw DomainError("at least one perturbation is required");

    const Policy optimal = make_optimal_policy(params, grid);
    std::vector<Policy> policies{optimal};
    for (const PolicyTransform& t : perturbations) policies.push_back(t.apply(optimal, params));

    const auto results = evaluate_policies(params, grid, n_paths, seed, policies, workers);
    const std::string digest = engine_digest(params, grid, n_paths, seed);
    const std::vector<double> base = utilities_of(results[0]);

    PerturbationStudy study;
    study.optimal = summarize(base, seed, digest);
    for (std::size_t p = 0; p < perturbations.size(); ++p) {
        const std::vector<double> u = utilities_of(results[p + 1]);
        std::vector<double> diff(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i) diff[i] = u[i] - base[i];
        const MonteCarloReport paired = summarize(diff, seed, digest);
        study.perturbed.push_back(
            {perturbations[p].label, summarize(u, seed, digest), paired.estimate, paired.std_error});
    }
    return study;
}

// ===========================================================================
// Frictionless limit
// ===========================================================================

FrictionlessDeviation frictionless_limit_check(const ModelParams& params, const PathSample& path) {
    params.validate();
    if (params.delta < 1e3) throw DomainError("frictionless check needs delta >= 1e3");
    const StrategyTrace trace = integrate_strategy(params, path, make_optimal_policy(params, path.grid));
    const double T = params.horizon;
    const double slack = 1e-12 * T;
    FrictionlessDeviation out;
    for (std::size_t k = 0; k < path.prices.size(); ++k) {
        const double t = path.grid.node(k);
        if (t < 0.1 * T - slack || t > 0.9 * T + slack) continue;
        const double target = frictionless_target(params, t, path.prices[k]);
        out.deviation = std::max(out.deviation, std::fabs(trace.positions[k] - target));
        out.target_sup = std::max(out.target_sup, std::fabs(target));
    }
    return out;
}

FrictionlessDeviation frictionless_limit_check(const ModelParams& params, const TimeGrid& grid,
                                               std::uint64_t seed) {
    return frictionless_limit_check(params, sample_ou_path(params, grid, seed, 0));
}

}  // namespace ouimpact
