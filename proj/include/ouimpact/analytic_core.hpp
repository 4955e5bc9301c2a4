#pragma once

/**
 * @file analytic_core.hpp
 * @brief Closed-form solution of exponential-utility trading with linear
 *        temporary impact on an Ornstein-Uhlenbeck asset.
 *
 * Units are normalized: unit mean-reversion rate, unit volatility and unit
 * risk aversion. A problem with other constants is mapped onto this one by
 * rescaling price and time before calling in.
 *
 * The price follows dS = (mu - S) dt + dW. Trading at rate phi executes at
 * S + phi / (2 delta), so terminal wealth is
 *   Phi0 (S_T - S0) + int phi_t (S_T - S_t) dt - (1 / 2 delta) int phi_t^2 dt.
 */

#include <cmath>

namespace ouimpact {

inline constexpr double kDefaultQuadratureTol = 1e-10;

/// Market and problem constants.
struct ModelParams {
    double mu = 0.0;       ///< long-term mean of the price
    double s0 = 0.0;       ///< initial price
    double delta = 1.0;    ///< market depth, > 0
    double horizon = 1.0;  ///< trading horizon T, > 0
    double phi0 = 0.0;     ///< initial position

    /// Throws DomainError unless delta > 0, horizon > 0 and all fields are finite.
    void validate() const;

    double initial_gap() const noexcept { return mu - s0; }
};

/// Components of dV/dt: vdot = delta (1 + delta) (A + B + C) / den(t)^2 with
/// u = sqrt(1+delta) t and
///   A = 2 (1+delta+delta t) sqrt(1+delta) sinh(u) - 2 (1+delta)^2 t,
///   B = 2 (1+delta) (cosh(u) - 1) - delta (1+delta) t^2,
///   C = delta^2 sinh(u)^2.
/// All three are >= 0 and vanish at t = 0, where vdot = 0.
///
/// a, b, c are the unscaled components; they overflow to +inf once
/// cosh(sqrt(1+delta) t)^2 does (argument above ~355). vdot itself is
/// evaluated in a cosh-scaled form and stays finite.
struct ValueShapeDerivative {
    double vdot = 0.0;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// The value-shape function V(t) for a fixed market depth.
///
/// V(0) = 0, V is strictly increasing for delta > 0 and tends to
/// sqrt(1 + delta) - 1, with a gap that closes only like delta / t.
/// For delta = 0 it vanishes identically.
class ValueShape {
public:
    /// Accepts delta >= 0; delta = 0 gives V == 0.
    explicit ValueShape(double delta);

    double delta() const noexcept { return delta_; }

    double operator()(double t) const;
    ValueShapeDerivative derivative(double t) const;

    /// int_0^horizon V(t) dt by adaptive Simpson with absolute tolerance tol.
    double integral(double horizon, double tol = kDefaultQuadratureTol) const;

    /// lim_{t -> inf} V(t) = sqrt(1 + delta) - 1.
    double limit() const noexcept { return root_ - 1.0; }

private:
    double delta_;
    double root_;  // sqrt(1 + delta)
};

double value_shape(double delta, double t);
ValueShapeDerivative value_shape_derivative(double delta, double t);
double value_shape_integral(double delta, double horizon, double tol = kDefaultQuadratureTol);

/// Coefficients of the optimal feedback law at time-to-maturity tau.
///
/// The rate is delta * (kappa * (mu - S) - Phi) / denom: the position is pulled
/// toward the target kappa * (mu - S) at speed delta / denom.
struct FeedbackCoefficients {
    double kappa = 1.0;
    double denom = 1.0;

    double target(double gap) const noexcept { return kappa * gap; }
};

/// Throws DomainError for tau <= 0; use feedback_rate for the maturity node.
FeedbackCoefficients feedback_coefficients(double delta, double tau);

/// Optimal trading rate at time t given the current price and position.
/// Vanishes at t = T (continuous extension).
double feedback_rate(const ModelParams& params, double t, double price, double position);

/// Frictionless-limit target (1 + T - t)(mu - S).
double frictionless_target(const ModelParams& params, double t, double price);

/// Optimal expected utility -exp(-V(T) (mu - S0)^2 / 2 - int_0^T V / 2).
/// Requires phi0 == 0 (throws UnsupportedCase otherwise).
double analytic_value(const ModelParams& params, double tol = kDefaultQuadratureTol);

/// log(-analytic_value): -(V(T) (mu - S0)^2 / 2 + int_0^T V / 2).
double certainty_equivalent(const ModelParams& params, double tol = kDefaultQuadratureTol);

}  // namespace ouimpact
