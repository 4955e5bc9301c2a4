#include "oracles.hpp"

#include "ouimpact/analytic_core.hpp"
#include "ouimpact/errors.hpp"
#include "ouimpact/variational.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace ouimpact;

namespace {

std::vector<EndpointProblem> endpoint_grid() {
    std::vector<EndpointProblem> out;
    for (double alpha : {0.5, std::sqrt(2.0), 3.0}) {
        for (double length : {0.25, 1.0, 4.0}) {
            out.push_back({0.0, length, alpha, 1.0, 0.0});
            out.push_back({0.5, 0.5 + length, alpha, 1.0, -0.5});
        }
    }
    return out;
}

std::vector<TerminalCoupledProblem> coupled_grid() {
    std::vector<TerminalCoupledProblem> out;
    for (double delta : {0.5, 1.0, 3.0}) {
        for (double length : {0.25, 1.0, 4.0}) {
            for (double theta : {1.0, -2.0}) {
                for (double phi0 : {0.0, 0.7}) out.push_back({0.0, length, theta, phi0, delta});
            }
        }
    }
    return out;
}

// Analytic derivative of the endpoint optimizer.
double endpoint_optimizer_slope(const EndpointProblem& p, double t) {
    const double a = p.alpha;
    return a * (-p.x * std::cosh(a * (p.T - t)) + p.y * std::cosh(a * (t - p.s))) / std::sinh(a * p.length());
}

double relative_gap(double value, double reference) {
    return std::fabs(value - reference) / std::fabs(reference);
}

}  // namespace

TEST_SUITE("endpoint_problem") {
    TEST_CASE("zero boundary data gives zero") {
        const EndpointProblem p{0.0, 1.0, 2.0, 0.0, 0.0};
        CHECK(endpoint_min_value(p) == 0.0);
        const DiscreteSolution sol = endpoint_oracle(p, 64);
        CHECK(sol.objective == 0.0);
        for (double v : sol.values) CHECK(v == 0.0);
    }

    TEST_CASE("equal endpoints on a vanishing interval") {
        double previous = 1.0;
        for (double length : {1e-2, 1e-4, 1e-6}) {
            const double v = endpoint_min_value({0.0, length, 1.0, 1.0, 1.0});
            CHECK(v > 0.0);
            CHECK(v < previous);
            previous = v;
        }
        CHECK(previous <= 1e-6);
    }

    TEST_CASE("symmetric in the endpoint values") {
        for (const auto& p : endpoint_grid()) {
            EndpointProblem swapped = p;
            std::swap(swapped.x, swapped.y);
            CHECK(endpoint_min_value(p) == endpoint_min_value(swapped));
        }
    }

    TEST_CASE("optimizer hits the boundary values") {
        for (const auto& p : endpoint_grid()) {
            CHECK(endpoint_optimizer(p, p.s) == doctest::Approx(p.x).epsilon(1e-15));
            CHECK(std::fabs(endpoint_optimizer(p, p.T) - p.y) <= 1e-15);
        }
    }

    TEST_CASE("odd symmetry at the midpoint") {
        CHECK(std::fabs(endpoint_optimizer({0.0, 2.0, 1.0, 1.0, -1.0}, 1.0)) <= 1e-16);
    }

    TEST_CASE("optimizer outside the interval is rejected") {
        const EndpointProblem p{0.0, 1.0, 1.0, 1.0, 0.0};
        CHECK_THROWS_AS(endpoint_optimizer(p, -1e-9), DomainError);
        CHECK_THROWS_AS(endpoint_optimizer(p, 1.0 + 1e-9), DomainError);
    }

    TEST_CASE("closed form equals the functional evaluated at the optimizer") {
        for (const auto& p : endpoint_grid()) {
            const double kinetic = oracle::composite_simpson(
                [&](double t) { return std::pow(endpoint_optimizer_slope(p, t), 2); }, p.s, p.T, 4096);
            const double potential = oracle::composite_simpson(
                [&](double t) { return std::pow(endpoint_optimizer(p, t), 2); }, p.s, p.T, 4096);
            const double direct = 0.5 * kinetic + 0.5 * p.alpha * p.alpha * potential;
            CHECK(endpoint_min_value(p) == doctest::Approx(direct).epsilon(1e-10));
        }
    }

    TEST_CASE("large alpha L stays finite") {
        const EndpointProblem p{0.0, 1.0, 2000.0, 1.0, -1.0};
        const double v = endpoint_min_value(p);
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(0.5 * p.alpha * 2.0).epsilon(1e-12));
        CHECK(std::isfinite(endpoint_optimizer(p, 0.5)));
    }

    TEST_CASE("oracle agrees with the closed form on the case grid") {
        for (const auto& p : endpoint_grid()) {
            CAPTURE(p.alpha);
            CAPTURE(p.T);
            CAPTURE(p.s);
            const DiscreteSolution sol = endpoint_oracle(p, 4000);
            const double exact = endpoint_min_value(p);
            CHECK(std::fabs(sol.objective - exact) <= 1e-5 * (1.0 + std::fabs(exact)));
            double sup = 0.0;
            for (std::size_t i = 0; i < sol.grid.size(); ++i) {
                sup = std::max(sup, std::fabs(sol.values[i] - endpoint_optimizer(p, sol.grid[i])));
            }
            CHECK(sup <= 1e-4);
        }
    }

    TEST_CASE("oracle error falls faster than 0.3 per doubling") {
        const EndpointProblem p{0.0, 1.0, 1.0, 1.0, 1.0};
        const double exact = endpoint_min_value(p);
        double previous = std::fabs(endpoint_oracle(p, 500).objective - exact);
        for (std::size_t n : {1000u, 2000u}) {
            const double err = std::fabs(endpoint_oracle(p, n).objective - exact);
            CHECK(err <= 0.3 * previous);
            previous = err;
        }
    }

    TEST_CASE("oracle minimizer minimizes its own discrete objective") {
        const EndpointProblem p{0.0, 1.0, 2.0, 1.0, -0.5};
        const DiscreteSolution sol = endpoint_oracle(p, 40);
        CHECK(endpoint_discrete_objective(p, sol.values) == doctest::Approx(sol.objective).epsilon(1e-14));
        for (std::size_t i = 1; i + 1 < sol.values.size(); i += 7) {
            for (double eps : {1e-3, -1e-3}) {
                auto bumped = sol.values;
                bumped[i] += eps;
                CHECK(endpoint_discrete_objective(p, bumped) > sol.objective);
            }
        }
    }

    TEST_CASE("invalid problems") {
        CHECK_THROWS_AS(endpoint_min_value({1.0, 1.0, 1.0, 0.0, 0.0}), DomainError);
        CHECK_THROWS_AS(endpoint_min_value({0.0, 1.0, 0.0, 0.0, 0.0}), DomainError);
        CHECK_THROWS_AS(endpoint_min_value({0.0, 1.0, -1.0, 0.0, 0.0}), DomainError);
        CHECK_THROWS_AS(endpoint_oracle({0.0, 1.0, 1.0, 0.0, 0.0}, 1), DomainError);
    }
}

TEST_SUITE("terminal_coupled_problem") {
    TEST_CASE("slice offset plus theta is the optimal integral") {
        for (const auto& p : coupled_grid()) {
            const double total = coupled_optimal_integral(p);
            CHECK(coupled_slice_offset(p) + p.theta == doctest::Approx(total).epsilon(1e-13).scale(1.0));
        }
    }

    TEST_CASE("trivial data") {
        CHECK(coupled_slice_offset({0.0, 1.0, 0.0, 0.0, 1.0}) == 0.0);
        CHECK(coupled_min_value({0.0, 1.0, 0.0, 0.0, 1.0}) == 0.0);
        const DiscreteSolution sol = coupled_oracle({0.0, 1.0, 0.0, 0.0, 1.0}, 50);
        CHECK(sol.objective == 0.0);
        for (double v : sol.values) CHECK(v == 0.0);
    }

    TEST_CASE("initial position at the target kills the optimal integral") {
        for (double delta : {0.5, 2.0}) {
            const double kappa = feedback_coefficients(delta, 1.5).kappa;
            const TerminalCoupledProblem p{0.0, 1.5, 0.8, kappa * 0.8, delta};
            CHECK(std::fabs(coupled_optimal_integral(p)) <= 1e-15);
        }
    }

    TEST_CASE("pure initial position is unwound") {
        const double denom = feedback_coefficients(1.0, 1.0).denom;
        const double total = coupled_optimal_integral({0.0, 1.0, 0.0, 1.0, 1.0});
        CHECK(total < 0.0);
        CHECK(total == doctest::Approx(-1.0 / denom).epsilon(1e-15));
        const DiscreteSolution sol = coupled_oracle({0.0, 1.0, 0.0, 1.0, 1.0}, 4000);
        CHECK(relative_gap(sol.integral, total) <= 1e-3);
    }

    TEST_CASE("minimum scales exactly with theta squared") {
        const TerminalCoupledProblem base{0.0, 1.3, 0.7, 0.0, 2.0};
        const double v = coupled_min_value(base);
        for (double c : {2.0, 0.25, -4.0}) {
            TerminalCoupledProblem scaled = base;
            scaled.theta *= c;
            CHECK(coupled_min_value(scaled) == c * c * v);
        }
    }

    TEST_CASE("minimum on a vanishing interval") {
        CHECK(coupled_min_value({0.0, 1e-12, 1.0, 0.0, 1.0}) <= 1e-12);
    }

    TEST_CASE("closed-form minimum needs a zero initial position") {
        CHECK_THROWS_AS(coupled_min_value({0.0, 1.0, 1.0, 0.5, 1.0}), UnsupportedCase);
    }

    TEST_CASE("library objective matches the direct double loop") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> normal;
        const TerminalCoupledProblem p{0.0, 1.7, -0.6, 0.4, 2.5};
        std::vector<double> h(37);
        for (double& v : h) v = normal(rng);
        const double direct = oracle::coupled_objective_direct(p.theta, p.phi0, p.delta, p.length(), h);
        CHECK(coupled_discrete_objective(p, h) == doctest::Approx(direct).epsilon(1e-12));
    }

    TEST_CASE("conjugate gradient matches a dense solve of the discrete quadratic") {
        const TerminalCoupledProblem p{0.0, 2.0, 1.5, 0.3, 3.0};
        const std::size_t n = 12;
        auto f = [&](const std::vector<double>& h) {
            return oracle::coupled_objective_direct(p.theta, p.phi0, p.delta, p.length(), h);
        };
        const std::vector<double> zero(n, 0.0);
        const double f0 = f(zero);
        std::vector<double> gradient(n), fi(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto plus = zero, minus = zero;
            plus[i] = 1.0;
            minus[i] = -1.0;
            fi[i] = f(plus);
            gradient[i] = 0.5 * (fi[i] - f(minus));
        }
        std::vector<std::vector<double>> hessian(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                auto both = zero;
                both[i] += 1.0;
                both[j] += 1.0;
                hessian[i][j] = i == j ? 2.0 * (fi[i] - f0 - gradient[i]) : f(both) - fi[i] - fi[j] + f0;
            }
        }
        for (double& g : gradient) g = -g;
        const std::vector<double> expected = oracle::dense_solve(hessian, gradient);
        const DiscreteSolution sol = coupled_oracle(p, n);
        REQUIRE(sol.values.size() == n);
        for (std::size_t i = 0; i < n; ++i) CHECK(sol.values[i] == doctest::Approx(expected[i]).epsilon(1e-8));
        CHECK(sol.objective == doctest::Approx(f(expected)).epsilon(1e-10));
    }

    TEST_CASE("oracle agrees with the closed forms on the case grid") {
        for (const auto& p : coupled_grid()) {
            CAPTURE(p.delta);
            CAPTURE(p.T);
            CAPTURE(p.theta);
            CAPTURE(p.phi0);
            const DiscreteSolution sol = coupled_oracle(p, 4000);
            CHECK(relative_gap(sol.integral, coupled_optimal_integral(p)) <= 1e-3);
            if (p.phi0 == 0.0) CHECK(relative_gap(sol.objective, coupled_min_value(p)) <= 1e-3);
        }
    }

    TEST_CASE("oracle integral at a nonzero initial position") {
        const TerminalCoupledProblem p{0.0, 1.0, 1.0, 0.5, 2.0};
        const FeedbackCoefficients fc = feedback_coefficients(2.0, 1.0);
        const DiscreteSolution sol = coupled_oracle(p, 4000);
        CHECK(relative_gap(sol.integral, (fc.kappa - 0.5) / fc.denom) <= 1e-3);
    }

    TEST_CASE("oracle at delta = 1, theta = 1") {
        const TerminalCoupledProblem p{0.0, 1.0, 1.0, 0.0, 1.0};
        const DiscreteSolution sol = coupled_oracle(p, 4000);
        CHECK(relative_gap(sol.objective, 0.5 * value_shape(1.0, 1.0)) <= 1e-3);
        CHECK(relative_gap(sol.integral, coupled_slice_offset(p) + 1.0) <= 1e-3);
        const TerminalCoupledProblem doubled{0.0, 1.0, 2.0, 0.0, 1.0};
        CHECK(relative_gap(coupled_oracle(doubled, 4000).objective, coupled_min_value(doubled)) <= 1e-3);
    }

    TEST_CASE("oracle error decays at second order") {
        const TerminalCoupledProblem p{0.0, 1.0, 1.0, 0.0, 1.0};
        const double exact = coupled_min_value(p);
        double previous = std::fabs(coupled_oracle(p, 250).objective - exact);
        for (std::size_t n : {500u, 1000u}) {
            const double err = std::fabs(coupled_oracle(p, n).objective - exact);
            CHECK(err <= 0.3 * previous);
            previous = err;
        }
    }

    TEST_CASE("single-node perturbations raise the discrete objective") {
        const TerminalCoupledProblem p{0.0, 1.0, 1.0, 0.0, 1.0};
        const DiscreteSolution sol = coupled_oracle(p, 4000);
        const double base = coupled_discrete_objective(p, sol.values);
        std::mt19937_64 rng(20240601);
        std::uniform_int_distribution<std::size_t> pick(0, sol.values.size() - 1);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t j = pick(rng);
            for (double eps : {1e-3, -1e-3}) {
                auto bumped = sol.values;
                bumped[j] += eps;
                CHECK(coupled_discrete_objective(p, bumped) > base);
            }
        }
    }

    TEST_CASE("invalid problems") {
        CHECK_THROWS_AS(coupled_optimal_integral({1.0, 1.0, 1.0, 0.0, 1.0}), DomainError);
        CHECK_THROWS_AS(coupled_optimal_integral({0.0, 1.0, 1.0, 0.0, 0.0}), DomainError);
        CHECK_THROWS_AS(coupled_oracle({0.0, 1.0, 1.0, 0.0, 1.0}, 1), DomainError);
    }
}

TEST_SUITE("dual_value") {
    TEST_CASE("matches the negative log of the analytic value on the grid") {
        for (double delta : {0.5, 1.0, 3.0}) {
            for (double horizon : {0.5, 1.0, 4.0}) {
                for (double gap : {0.0, 0.5, 2.0}) {
                    const ModelParams params{gap, 0.0, delta, horizon, 0.0};
                    CHECK(std::fabs(dual_value(params) + std::log(-analytic_value(params))) <= 1e-8);
                }
            }
        }
    }

    TEST_CASE("no drift gap leaves half the integral") {
        const ModelParams params{0.3, 0.3, 2.0, 1.5, 0.0};
        CHECK(dual_value(params) == doctest::Approx(0.5 * value_shape_integral(2.0, 1.5)).epsilon(1e-9));
    }

    TEST_CASE("headline parameters") {
        const ModelParams params{0.5, 0.0, 1.0, 1.0, 0.0};
        CHECK(std::fabs(dual_value(params) + std::log(-analytic_value(params))) <= 1e-8);
    }

    TEST_CASE("short horizon") { CHECK(std::fabs(dual_value({1.0, 0.0, 1.0, 1e-9, 0.0})) <= 1e-9); }

    TEST_CASE("requires a zero initial position") {
        CHECK_THROWS_AS(dual_value({0.5, 0.0, 1.0, 1.0, 0.2}), UnsupportedCase);
        CHECK_THROWS_AS(dual_value({0.5, 0.0, 1.0, 1.0, 0.0}, 0.0), DomainError);
    }
}
