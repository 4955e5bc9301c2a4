#pragma once

/**
 * @file numerics.hpp
 * @brief Small numerical kernels shared by the closed-form and oracle code.
 *
 * Overflow-safe hyperbolic helpers, adaptive Simpson quadrature, a symmetric
 * tridiagonal solver and a matrix-free conjugate gradient.
 */

#include "ouimpact/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ouimpact::numerics {

// ===========================================================================
// Hyperbolic helpers
// ===========================================================================

// Above this argument exp(u) is within a factor 1e-16 of 2 cosh(u).
inline constexpr double kLargeHyperbolicArg = 40.0;

/// 1 / cosh(u), finite for every finite u.
inline double sech(double u) {
    const double a = std::fabs(u);
    if (a > kLargeHyperbolicArg) return 2.0 * std::exp(-a);
    return 1.0 / std::cosh(a);
}

/// 1 / sinh(u) for u > 0; underflows gracefully to 0 for large u.
inline double csch(double u) {
    if (u > kLargeHyperbolicArg) return 2.0 * std::exp(-u);
    return 1.0 / std::sinh(u);
}

/// 1 - sech(u) without cancellation near u = 0.
inline double one_minus_sech(double u) {
    const double a = std::fabs(u);
    if (a < 1.0) {
        const double s = std::sinh(0.5 * a);
        return 2.0 * s * s / std::cosh(a);
    }
    return 1.0 - sech(a);
}

/// sinh(a) / sinh(b) for 0 <= a <= b, b > 0, without overflow.
inline double sinh_ratio(double a, double b) {
    if (a == b) return 1.0;
    if (b <= kLargeHyperbolicArg) return std::sinh(a) / std::sinh(b);
    return std::exp(a - b) * (-std::expm1(-2.0 * a)) / (-std::expm1(-2.0 * b));
}

// ===========================================================================
// Adaptive Simpson quadrature
// ===========================================================================

inline constexpr int kDefaultMaxDepth = 40;

namespace detail {

template <typename F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth, bool& converged) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        converged = false;
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, converged) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, converged);
}

}  // namespace detail

/// Adaptive Simpson rule for \f$\int_a^b f\f$ with absolute tolerance @p tol.
///
/// Throws QuadratureError (carrying the best estimate) when some subinterval
/// does not meet its share of the tolerance within @p max_depth bisections.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = kDefaultMaxDepth) {
    if (!(tol > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("adaptive_simpson: tolerance must be positive and bounds finite");
    }
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    bool converged = true;
    const double result = detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth, converged);
    if (!converged) {
        throw QuadratureError("adaptive_simpson: maximum refinement depth reached", result);
    }
    return result;
}

// ===========================================================================
// Linear solvers
// ===========================================================================

/// Solves a tridiagonal system by forward elimination and back substitution
/// (no pivoting; intended for diagonally dominant / SPD systems).
///
/// @p lower[i] couples row i to unknown i-1 (lower[0] unused), @p upper[i]
/// couples row i to unknown i+1 (upper[n-1] unused).
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0) {
        throw DomainError("solve_tridiagonal: inconsistent system dimensions");
    }
    std::vector<double> c(n), d(n), x(n);
    double pivot = diag[0];
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * c[i - 1];
        if (pivot == 0.0) throw DomainError("solve_tridiagonal: zero pivot");
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    return x;
}

struct CgResult {
    std::vector<double> solution;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

/// Matrix-free conjugate gradient for a symmetric positive-definite operator.
///
/// @p apply(x, out) must write A x into out. Iterates until
/// ||b - A x|| <= rel_tol * ||b||; throws SolverError with the best iterate
/// after @p max_iterations.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> b, double rel_tol,
                            std::size_t max_iterations) {
    const std::size_t n = b.size();
    auto dot = [n](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
        return s;
    };

    CgResult out;
    out.solution.assign(n, 0.0);
    std::vector<double> r(b.begin(), b.end());
    const double b_norm = std::sqrt(dot(r, r));
    if (b_norm == 0.0) return out;

    std::vector<double> p = r;
    std::vector<double> ap(n);
    double rr = dot(r, r);
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        apply(std::span<const double>(p), std::span<double>(ap));
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw SolverError("conjugate_gradient: operator is not positive definite", out.solution,
                              std::sqrt(rr) / b_norm);
        }
        const double step = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            out.solution[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        const double rr_next = dot(r, r);
        out.iterations = it;
        out.relative_residual = std::sqrt(rr_next) / b_norm;
        if (out.relative_residual <= rel_tol) return out;
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_next;
    }
    throw SolverError("conjugate_gradient: no convergence after " + std::to_string(max_iterations) +
                          " iterations",
                      out.solution, out.relative_residual);
}

}  // namespace ouimpact::numerics
