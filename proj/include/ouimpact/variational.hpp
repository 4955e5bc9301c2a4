#pragma once

/**
 * @file variational.hpp
 * @brief Deterministic variational problems behind the closed-form solution.
 *
 * Two minimization problems:
 *
 *  - Endpoint problem: minimize 1/2 int_s^T g'^2 + 1/2 alpha^2 int_s^T g^2 over
 *    paths with g(s) = x, g(T) = y. The optimizer solves g'' = alpha^2 g.
 *  - Terminal-coupled problem: minimize over h in L^2[s, T]
 *      (Phi0 - theta) H + 1/2 H^2 + 1/2 int h^2
 *        + 1/2 int (int_s^t h - theta)^2 dt + delta/2 int (int_t^T h)^2 dt,
 *    with H = int_s^T h. Its optimal H is the optimal trading rate divided by delta.
 *
 * Each closed form is paired with an independent discretized oracle.
 */

#include "ouimpact/analytic_core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ouimpact {

struct EndpointProblem {
    double s = 0.0;
    double T = 1.0;
    double alpha = 1.0;
    double x = 0.0;  ///< g(s)
    double y = 0.0;  ///< g(T)

    /// Throws DomainError unless T > s, alpha > 0 and all fields are finite.
    void validate() const;
    double length() const noexcept { return T - s; }
};

struct TerminalCoupledProblem {
    double s = 0.0;
    double T = 1.0;
    double theta = 0.0;
    double phi0 = 0.0;
    double delta = 1.0;

    void validate() const;
    double length() const noexcept { return T - s; }
};

/// Discretized minimizer returned by the oracles.
///
/// Endpoint problem: grid holds the n + 1 nodes and values the node values of g;
/// integral is the trapezoid of g.
/// Terminal-coupled problem: h is piecewise constant on n cells, grid holds the
/// cell midpoints and values the cell values; integral is the exact integral of
/// that piecewise-constant h.
struct DiscreteSolution {
    std::vector<double> grid;
    std::vector<double> values;
    double objective = 0.0;
    double integral = 0.0;
    std::size_t iterations = 0;  ///< CG iterations (terminal-coupled oracle only)
};

// Endpoint problem ------------------------------------------------------------

double endpoint_min_value(const EndpointProblem& p);
double endpoint_optimizer(const EndpointProblem& p, double t);

/// Forward differences for g', trapezoid weights for g^2; interior nodes from a
/// tridiagonal solve.
DiscreteSolution endpoint_oracle(const EndpointProblem& p, std::size_t n);

/// Discrete objective for node values g_0..g_n (g_0 and g_n are used as given).
double endpoint_discrete_objective(const EndpointProblem& p, std::span<const double> nodes);

// Terminal-coupled problem ------------------------------------------------------

/// Minimizing slice offset z-hat = H-hat - theta.
double coupled_slice_offset(const TerminalCoupledProblem& p);

/// Optimal H-hat = (kappa theta - Phi0) / denom at horizon T - s.
double coupled_optimal_integral(const TerminalCoupledProblem& p);

/// Minimum value 1/2 V(T - s) theta^2. Requires phi0 == 0 (UnsupportedCase otherwise).
double coupled_min_value(const TerminalCoupledProblem& p);

/// h is piecewise constant on n uniform cells. Inner integrals at node t_k are
/// left sums for int_s^t h and right sums for int_t^T h (both exact for
/// piecewise-constant h); outer integrals use the trapezoid rule over nodes.
/// The resulting quadratic is minimized by matrix-free conjugate gradient to a
/// relative residual of 1e-12.
DiscreteSolution coupled_oracle(const TerminalCoupledProblem& p, std::size_t n);

/// Discrete objective of coupled_oracle for arbitrary cell values.
double coupled_discrete_objective(const TerminalCoupledProblem& p, std::span<const double> cells);

// Dual value ---------------------------------------------------------------------

/// Deterministic dual value: -T/2 + (drift-part minimum at theta = mu - S0)
/// + int_0^T 1/2 (V(T - s) + 1) ds. Equals -log(-analytic_value(params)).
double dual_value(const ModelParams& params, double tol = kDefaultQuadratureTol);

}  // namespace ouimpact
