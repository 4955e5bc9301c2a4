#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ouimpact {

/// Invalid or non-finite argument passed to a library operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The request is well-formed but the closed form is not available for it
/// (e.g. the optimal value with a nonzero initial position).
class UnsupportedCase : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Adaptive quadrature hit its refinement limit before meeting the tolerance.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double best_estimate)
        : std::runtime_error(what), best_estimate_(best_estimate) {}

    double best_estimate() const noexcept { return best_estimate_; }

private:
    double best_estimate_;
};

/// Iterative linear solver failed to reach its residual target.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> best_iterate, double relative_residual)
        : std::runtime_error(what),
          best_iterate_(std::move(best_iterate)),
          relative_residual_(relative_residual) {}

    const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
    double relative_residual() const noexcept { return relative_residual_; }

private:
    std::vector<double> best_iterate_;
    double relative_residual_;
};

/// A trading policy produced a non-finite rate while being integrated along a path.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Monte Carlo run aborted because a path produced an unrepresentable utility.
class MonteCarloError : public std::runtime_error {
public:
    MonteCarloError(const std::string& what, std::size_t path_index)
        : std::runtime_error(what), path_index_(path_index) {}

    std::size_t path_index() const noexcept { return path_index_; }

private:
    std::size_t path_index_;
};

}  // namespace ouimpact
