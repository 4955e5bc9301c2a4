#include "ouimpact/analytic_core.hpp"

#include "ouimpact/errors.hpp"
#include "ouimpact/numerics.hpp"

#include <cmath>
#include <string>

namespace ouimpact {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

void require_time(double t, const char* what) {
    require_finite(t, what);
    if (t < 0.0) throw DomainError(std::string(what) + " must be non-negative");
}

}  // namespace

void ModelParams::validate() const {
    require_finite(mu, "mu");
    require_finite(s0, "s0");
    require_finite(delta, "delta");
    require_finite(horizon, "horizon");
    require_finite(phi0, "phi0");
    if (!(delta > 0.0)) throw DomainError("delta must be > 0");
    if (!(horizon > 0.0)) throw DomainError("horizon must be > 0");
}

// ===========================================================================
// ValueShape
// ===========================================================================

ValueShape::ValueShape(double delta) : delta_(delta), root_(0.0) {
    require_finite(delta, "delta");
    if (delta < 0.0) throw DomainError("delta must be non-negative");
    root_ = std::sqrt(1.0 + delta);
}

double ValueShape::operator()(double t) const {
    require_time(t, "t");
    const double d = delta_;
    const double r = root_;
    const double u = r * t;
    const double th = std::tanh(u);
    const double se = numerics::sech(u);
    const double q = 1.0 + d + d * t;
    // Numerator and denominator of V + 1 divided by cosh(u); the difference
    // num - den is expanded so that V(0) and V at delta = 0 are exactly zero.
    const double den = r * q * th + (1.0 + d * d) + 2.0 * d * se;
    const double diff = d * ((1.0 + d) * t + 2.0 * numerics::one_minus_sech(u) - r * (1.0 + t) * th);
    return diff / den;
}

ValueShapeDerivative ValueShape::derivative(double t) const {
    require_time(t, "t");
    const double d = delta_;
    const double r = root_;
    const double u = r * t;
    const double q = 1.0 + d + d * t;

    ValueShapeDerivative out;
    const double sh = std::sinh(u);
    const double sh_half = std::sinh(0.5 * u);
    // A = 2 q r sinh(u) - 2 (1+d)^2 t, regrouped as two non-negative terms.
    out.a = 2.0 * (1.0 + d) * r * (sh - u) + 2.0 * d * t * r * sh;
    out.b = 4.0 * (1.0 + d) * sh_half * sh_half - d * (1.0 + d) * t * t;
    out.c = d * d * sh * sh;

    // Same quantities divided by cosh(u)^2.
    const double th = std::tanh(u);
    const double se = numerics::sech(u);
    const double a_s = 2.0 * r * se * ((1.0 + d) * (th - u * se) + d * t * th);
    const double b_s = 2.0 * (1.0 + d) * se * numerics::one_minus_sech(u) - d * (1.0 + d) * t * t * se * se;
    const double c_s = d * d * th * th;
    const double den = r * q * th + (1.0 + d * d) + 2.0 * d * se;
    out.vdot = d * (1.0 + d) * (a_s + b_s + c_s) / (den * den);
    return out;
}

double ValueShape::integral(double horizon, double tol) const {
    require_time(horizon, "horizon");
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");
    if (delta_ == 0.0 || horizon == 0.0) return 0.0;
    return numerics::adaptive_simpson([this](double t) { return (*this)(t); }, 0.0, horizon, tol);
}

double value_shape(double delta, double t) { return ValueShape(delta)(t); }

ValueShapeDerivative value_shape_derivative(double delta, double t) {
    if (!(delta > 0.0)) throw DomainError("delta must be > 0");
    return ValueShape(delta).derivative(t);
}

double value_shape_integral(double delta, double horizon, double tol) {
    return ValueShape(delta).integral(horizon, tol);
}

// ===========================================================================
// Feedback law
// ===========================================================================

FeedbackCoefficients feedback_coefficients(double delta, double tau) {
    require_finite(delta, "delta");
    require_finite(tau, "tau");
    if (!(delta > 0.0)) throw DomainError("delta must be > 0");
    if (!(tau > 0.0)) throw DomainError("tau must be > 0");
    const double r = std::sqrt(1.0 + delta);
    const double r3 = (1.0 + delta) * r;
    const double u = r * tau;
    const double th_half = std::tanh(0.5 * u);
    const double drift = delta * tau / (1.0 + delta);

    FeedbackCoefficients out;
    out.kappa = 1.0 + (1.0 - delta) / r3 * th_half + drift;
    out.denom = 1.0 + drift + r * numerics::csch(u) + (1.0 + delta * delta) / r3 * th_half;
    return out;
}

double feedback_rate(const ModelParams& params, double t, double price, double position) {
    params.validate();
    require_finite(t, "t");
    require_finite(price, "price");
    require_finite(position, "position");
    if (t < 0.0 || t > params.horizon) throw DomainError("t must lie in [0, T]");
    const double tau = params.horizon - t;
    if (tau == 0.0) return 0.0;
    const FeedbackCoefficients fc = feedback_coefficients(params.delta, tau);
    return params.delta * (fc.target(params.mu - price) - position) / fc.denom;
}

double frictionless_target(const ModelParams& params, double t, double price) {
    return (1.0 + params.horizon - t) * (params.mu - price);
}

// ===========================================================================
// Optimal value
// ===========================================================================

double certainty_equivalent(const ModelParams& params, double tol) {
    params.validate();
    if (params.phi0 != 0.0) {
        throw UnsupportedCase("the closed-form optimal value is only available for phi0 = 0");
    }
    const ValueShape shape(params.delta);
    const double gap = params.initial_gap();
    return -(0.5 * shape(params.horizon) * gap * gap + 0.5 * shape.integral(params.horizon, tol));
}

double analytic_value(const ModelParams& params, double tol) {
    return -std::exp(certainty_equivalent(params, tol));
}

}  // namespace ouimpact
