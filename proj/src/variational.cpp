#include "ouimpact/variational.hpp"

#include "ouimpact/errors.hpp"
#include "ouimpact/numerics.hpp"

#include <cmath>
#include <string>

namespace ouimpact {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

std::vector<double> trapezoid_weights(std::size_t n, double step) {
    std::vector<double> w(n + 1, step);
    w.front() = 0.5 * step;
    w.back() = 0.5 * step;
    return w;
}

double node_time(double s, double T, std::size_t k, std::size_t n, double step) {
    return k == n ? T : std::fma(static_cast<double>(k), step, s);
}

}  // namespace

void EndpointProblem::validate() const {
    require_finite(s, "s");
    require_finite(T, "T");
    require_finite(alpha, "alpha");
    require_finite(x, "x");
    require_finite(y, "y");
    if (!(T > s)) throw DomainError("T must exceed s");
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
}

void TerminalCoupledProblem::validate() const {
    require_finite(s, "s");
    require_finite(T, "T");
    require_finite(theta, "theta");
    require_finite(phi0, "phi0");
    require_finite(delta, "delta");
    if (!(T > s)) throw DomainError("T must exceed s");
    if (!(delta > 0.0)) throw DomainError("delta must be > 0");
}

// ===========================================================================
// Endpoint problem
// ===========================================================================

double endpoint_min_value(const EndpointProblem& p) {
    p.validate();
    const double u = p.alpha * p.length();
    const double dxy = p.x - p.y;
    return 0.5 * p.alpha *
           (dxy * dxy * numerics::csch(u) + std::tanh(0.5 * u) * (p.x * p.x + p.y * p.y));
}

double endpoint_optimizer(const EndpointProblem& p, double t) {
    p.validate();
    require_finite(t, "t");
    if (t < p.s || t > p.T) throw DomainError("t must lie in [s, T]");
    const double full = p.alpha * p.length();
    return p.x * numerics::sinh_ratio(p.alpha * (p.T - t), full) +
           p.y * numerics::sinh_ratio(p.alpha * (t - p.s), full);
}

double endpoint_discrete_objective(const EndpointProblem& p, std::span<const double> nodes) {
    p.validate();
    if (nodes.size() < 3) throw DomainError("endpoint objective needs at least 3 nodes");
    const std::size_t n = nodes.size() - 1;
    const double step = p.length() / static_cast<double>(n);
    const auto w = trapezoid_weights(n, step);
    double kinetic = 0.0;
    double potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dg = nodes[i + 1] - nodes[i];
        kinetic += dg * dg;
    }
    for (std::size_t i = 0; i <= n; ++i) potential += w[i] * nodes[i] * nodes[i];
    return 0.5 * kinetic / step + 0.5 * p.alpha * p.alpha * potential;
}

DiscreteSolution endpoint_oracle(const EndpointProblem& p, std::size_t n) {
    p.validate();
    if (n < 2) throw DomainError("endpoint oracle needs n >= 2");
    const double step = p.length() / static_cast<double>(n);
    const std::size_t m = n - 1;  // interior unknowns

    const double off = -1.0 / step;
    std::vector<double> lower(m, off), upper(m, off);
    std::vector<double> diag(m, 2.0 / step + p.alpha * p.alpha * step);
    std::vector<double> rhs(m, 0.0);
    rhs.front() += p.x / step;
    rhs.back() += p.y / step;
    const std::vector<double> interior = numerics::solve_tridiagonal(lower, diag, upper, rhs);

    DiscreteSolution out;
    out.grid.resize(n + 1);
    out.values.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) out.grid[k] = node_time(p.s, p.T, k, n, step);
    out.values.front() = p.x;
    out.values.back() = p.y;
    for (std::size_t i = 0; i < m; ++i) out.values[i + 1] = interior[i];

    out.objective = endpoint_discrete_objective(p, out.values);
    const auto w = trapezoid_weights(n, step);
    for (std::size_t k = 0; k <= n; ++k) out.integral += w[k] * out.values[k];
    return out;
}

// ===========================================================================
// Terminal-coupled problem
// ===========================================================================

double coupled_slice_offset(const TerminalCoupledProblem& p) {
    p.validate();
    const double r = std::sqrt(1.0 + p.delta);
    const double u = r * p.length();
    const double coth = 1.0 / std::tanh(u);
    const double linear = p.phi0 + p.delta * p.theta / r * coth + p.theta / r * numerics::csch(u);
    return -linear / feedback_coefficients(p.delta, p.length()).denom;
}

double coupled_optimal_integral(const TerminalCoupledProblem& p) {
    p.validate();
    const FeedbackCoefficients fc = feedback_coefficients(p.delta, p.length());
    return (fc.target(p.theta) - p.phi0) / fc.denom;
}

double coupled_min_value(const TerminalCoupledProblem& p) {
    p.validate();
    if (p.phi0 != 0.0) {
        throw UnsupportedCase("closed-form minimum is only available for phi0 = 0");
    }
    return 0.5 * value_shape(p.delta, p.length()) * p.theta * p.theta;
}

namespace {

// Prefix sums L_k = step * sum_{j<k} h_j and suffix sums R_k = step * sum_{j>=k} h_j, k = 0..n.
void cumulative_sums(std::span<const double> h, double step, std::vector<double>& left,
                     std::vector<double>& right) {
    const std::size_t n = h.size();
    left.assign(n + 1, 0.0);
    right.assign(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) left[j + 1] = left[j] + step * h[j];
    for (std::size_t j = n; j-- > 0;) right[j] = right[j + 1] + step * h[j];
}

}  // namespace

double coupled_discrete_objective(const TerminalCoupledProblem& p, std::span<const double> cells) {
    p.validate();
    if (cells.empty()) throw DomainError("coupled objective needs at least one cell");
    const std::size_t n = cells.size();
    const double step = p.length() / static_cast<double>(n);
    const auto w = trapezoid_weights(n, step);
    std::vector<double> left, right;
    cumulative_sums(cells, step, left, right);

    const double total = left[n];
    double sq = 0.0;
    for (double v : cells) sq += v * v;
    double tracking = 0.0;
    double impact = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double e = left[k] - p.theta;
        tracking += w[k] * e * e;
        impact += w[k] * right[k] * right[k];
    }
    return (p.phi0 - p.theta) * total + 0.5 * total * total + 0.5 * step * sq + 0.5 * tracking +
           0.5 * p.delta * impact;
}

DiscreteSolution coupled_oracle(const TerminalCoupledProblem& p, std::size_t n) {
    p.validate();
    if (n < 2) throw DomainError("coupled oracle needs n >= 2");
    const double step = p.length() / static_cast<double>(n);
    const auto w = trapezoid_weights(n, step);

    // Gradient of the discrete objective divided by step is A h - b with
    //   (A h)_j = H + h_j + sum_{k>j} w_k L_k + delta sum_{k<=j} w_k R_k.
    std::vector<double> left, right, tail(n + 1);
    auto apply = [&](std::span<const double> h, std::span<double> out) {
        cumulative_sums(h, step, left, right);
        const double total = left[n];
        tail[n] = 0.0;
        for (std::size_t k = n; k-- > 0;) tail[k] = tail[k + 1] + w[k + 1] * left[k + 1];
        double head = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            head += w[j] * right[j];
            out[j] = total + h[j] + tail[j] + p.delta * head;
        }
    };

    std::vector<double> rhs(n);
    double w_tail = 0.0;
    for (std::size_t j = n; j-- > 0;) {
        w_tail += w[j + 1];
        rhs[j] = (p.theta - p.phi0) + p.theta * w_tail;
    }

    const numerics::CgResult cg = numerics::conjugate_gradient(apply, rhs, 1e-12, 10 * n);

    DiscreteSolution out;
    out.grid.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.grid[j] = std::fma(static_cast<double>(j) + 0.5, step, p.s);
    }
    out.values = cg.solution;
    out.iterations = cg.iterations;
    out.objective = coupled_discrete_objective(p, out.values);
    for (double v : out.values) out.integral += step * v;
    return out;
}

// ===========================================================================
// Dual value
// ===========================================================================

double dual_value(const ModelParams& params, double tol) {
    params.validate();
    if (params.phi0 != 0.0) {
        throw UnsupportedCase("the dual value is only assembled for phi0 = 0");
    }
    const double T = params.horizon;
    const ValueShape shape(params.delta);
    const double drift_part =
        coupled_min_value(TerminalCoupledProblem{0.0, T, params.initial_gap(), 0.0, params.delta});
    const double noise_part = numerics::adaptive_simpson(
        [&](double s) { return 0.5 * (shape(T - s) + 1.0); }, 0.0, T, tol);
    return -0.5 * T + drift_part + noise_part;
}

}  // namespace ouimpact
