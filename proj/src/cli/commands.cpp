#include "ouimpact/cli.hpp"

#include "ouimpact/digest.hpp"
#include "ouimpact/errors.hpp"
#include "ouimpact/variational.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ouimpact::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Field readers
// ---------------------------------------------------------------------------

double read_number(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number()) throw ConfigError(path + key + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + key + ": must be finite");
    return d;
}

double read_positive(const json& obj, const std::string& path, const char* key, double fallback) {
    const double d = read_number(obj, path, key, fallback);
    if (!(d > 0.0)) throw ConfigError(path + key + ": must be > 0");
    return d;
}

std::size_t read_count(const json& obj, const std::string& path, const char* key, std::size_t fallback,
                       std::size_t minimum) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number_unsigned()) throw ConfigError(path + key + ": expected a non-negative integer");
    const auto n = v.get<std::size_t>();
    if (n < minimum) throw ConfigError(path + key + ": must be >= " + std::to_string(minimum));
    return n;
}

bool read_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw ConfigError(path + key + ": expected a boolean");
    return obj[key].get<bool>();
}

std::string read_string(const json& obj, const std::string& path, const char* key, std::string fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw ConfigError(path + key + ": expected a string");
    return obj[key].get<std::string>();
}

std::vector<double> read_number_list(const json& obj, const std::string& path, const char* key,
                                     std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_array()) throw ConfigError(path + key + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw ConfigError(path + key + "[" + std::to_string(i) + "]: expected a number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

const json& read_object(const json& obj, const std::string& path, const char* key) {
    static const json kEmpty = json::object();
    if (!obj.contains(key)) return kEmpty;
    if (!obj[key].is_object()) throw ConfigError(path + key + ": expected an object");
    return obj[key];
}

json model_json(const ModelParams& p) {
    return {{"mu", p.mu}, {"s0", p.s0}, {"delta", p.delta}, {"horizon", p.horizon}, {"phi0", p.phi0}};
}

json report_header(const RunConfig& config, const char* command) {
    return {{"command", command}, {"config_digest", config.digest}, {"seed", config.seed}};
}

double relative_error(double discrete, double closed) {
    const double diff = std::fabs(discrete - closed);
    if (diff == 0.0) return 0.0;
    return diff / std::fabs(closed);
}

void append_csv_row(std::string& out, std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += f;
        first = false;
    }
    out += '\n';
}

}  // namespace

json to_json(const MonteCarloReport& report) {
    return {{"n_paths", report.n_paths},
            {"estimate", report.estimate},
            {"std_error", report.std_error},
            {"seed", report.seed},
            {"engine_digest", report.config_digest}};
}

// ===========================================================================
// value
// ===========================================================================

CommandOutput cmd_value(const RunConfig& config) {
    const json& doc = config.document;
    const ModelParams params = read_model(doc);
    const double tol = read_positive(doc, "", "tolerance", kDefaultQuadratureTol);
    const double gap_tol = read_positive(doc, "", "duality_tolerance", 1e-8);
    if (params.phi0 != 0.0) throw ConfigError("model.phi0: the value command requires phi0 = 0");

    const ValueShape shape(params.delta);
    const double integral = shape.integral(params.horizon, tol);
    const double value = analytic_value(params, tol);
    const double ce = certainty_equivalent(params, tol);
    const double dual = dual_value(params, tol);
    const double gap = dual + std::log(-value);

    CommandOutput out;
    out.report = report_header(config, "value");
    out.report["model"] = model_json(params);
    out.report["V_of_T"] = shape(params.horizon);
    out.report["integral_V"] = integral;
    out.report["analytic_value"] = value;
    out.report["certainty_equivalent"] = ce;
    out.report["dual_value"] = dual;
    out.report["duality_gap"] = gap;
    out.pass = std::fabs(gap) <= gap_tol;
    out.report["pass"] = out.pass;
    return out;
}

// ===========================================================================
// montecarlo
// ===========================================================================

CommandOutput cmd_montecarlo(const RunConfig& config, const MonteCarloOptions& options) {
    const json& doc = config.document;
    const ModelParams params = read_model(doc);
    const std::size_t n_steps = read_count(doc, "", "n_steps", 2000, 1);
    const std::size_t n_paths = read_count(doc, "", "n_paths", 200000, 2);
    const std::string policy_name = read_string(doc, "", "policy", "optimal");
    const double allowance = read_number(doc, "", "allowance", 2e-3);
    const bool perturb = read_bool(doc, "", "perturbations", false);
    const double tol = read_positive(doc, "", "tolerance", kDefaultQuadratureTol);
    if (allowance < 0.0) throw ConfigError("allowance: must be >= 0");
    if (policy_name != "optimal" && policy_name != "zero") {
        throw ConfigError("policy: expected \"optimal\" or \"zero\"");
    }
    if (perturb && policy_name != "optimal") {
        throw ConfigError("perturbations: only available for the optimal policy");
    }

    const TimeGrid grid(0.0, params.horizon, n_steps);
    const Policy policy = policy_name == "optimal" ? make_optimal_policy(params, grid) : make_zero_policy();

    CommandOutput out;
    out.report = report_header(config, "montecarlo");
    out.report["model"] = model_json(params);
    out.report["grid"] = {{"n_steps", n_steps}, {"step", grid.step()}};
    out.report["policy"] = policy_name;

    MonteCarloReport mc;
    if (perturb) {
        const auto transforms = default_perturbations(params);
        const PerturbationStudy study = perturbation_study(params, grid, n_paths, config.seed, transforms,
                                                           options.workers);
        mc = study.optimal;
        json rows = json::array();
        for (const auto& p : study.perturbed) {
            const bool within = p.paired_difference <= 3.0 * p.paired_std_error;
            out.pass = out.pass && within;
            rows.push_back({{"label", p.label},
                            {"estimate", p.report.estimate},
                            {"std_error", p.report.std_error},
                            {"paired_difference", p.paired_difference},
                            {"paired_std_error", p.paired_std_error},
                            {"within_3se", within},
                            {"underperforms", p.paired_difference < 0.0}});
        }
        out.report["perturbations"] = rows;
    } else {
        mc = monte_carlo_value(params, grid, n_paths, config.seed, policy, options.workers);
    }
    out.report["monte_carlo"] = to_json(mc);

    if (policy_name == "optimal" && params.phi0 == 0.0) {
        const double value = analytic_value(params, tol);
        const double err = std::fabs(mc.estimate - value);
        const double threshold = 3.0 * mc.std_error + allowance;
        out.report["analytic_value"] = value;
        out.report["abs_error"] = err;
        out.report["threshold"] = threshold;
        out.pass = out.pass && err <= threshold;
    }
    out.report["pass"] = out.pass;

    if (options.want_paths) {
        const Policy policies[] = {policy};
        const auto outcomes = evaluate_policies(params, grid, n_paths, config.seed, policies, options.workers);
        out.paths_csv = "path_index,terminal_wealth,utility\n";
        for (std::size_t i = 0; i < n_paths; ++i) {
            append_csv_row(out.paths_csv, {std::to_string(i), format_double(outcomes[0][i].wealth),
                                           format_double(outcomes[0][i].utility)});
        }
    }
    if (options.want_trace) {
        const PathSample path = sample_ou_path(params, grid, config.seed, 0);
        const StrategyTrace trace = integrate_strategy(params, path, policy);
        out.trace_csv = "t,S,phi,Phi\n";
        for (std::size_t k = 0; k <= n_steps; ++k) {
            append_csv_row(out.trace_csv, {format_double(grid.node(k)), format_double(path.prices[k]),
                                           format_double(trace.rates[k]), format_double(trace.positions[k])});
        }
    }
    return out;
}

// ===========================================================================
// oracles
// ===========================================================================

namespace {

std::vector<EndpointProblem> default_endpoint_cases() {
    std::vector<EndpointProblem> cases;
    for (double alpha : {0.5, std::sqrt(2.0), 3.0}) {
        for (double length : {0.25, 1.0, 4.0}) {
            cases.push_back({0.0, length, alpha, 1.0, 0.0});
            cases.push_back({0.5, 0.5 + length, alpha, 1.0, -0.5});
        }
    }
    return cases;
}

std::vector<TerminalCoupledProblem> default_coupled_cases() {
    std::vector<TerminalCoupledProblem> cases;
    for (double delta : {0.5, 1.0, 3.0}) {
        for (double length : {0.25, 1.0, 4.0}) {
            for (double theta : {1.0, -2.0}) {
                for (double phi0 : {0.0, 0.7}) cases.push_back({0.0, length, theta, phi0, delta});
            }
        }
    }
    return cases;
}

std::vector<EndpointProblem> read_endpoint_cases(const json& doc) {
    if (!doc.contains("endpoint_cases")) return default_endpoint_cases();
    const auto& arr = doc["endpoint_cases"];
    if (!arr.is_array()) throw ConfigError("endpoint_cases: expected an array");
    std::vector<EndpointProblem> cases;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "endpoint_cases[" + std::to_string(i) + "].";
        if (!arr[i].is_object()) throw ConfigError(path.substr(0, path.size() - 1) + ": expected an object");
        EndpointProblem p{read_number(arr[i], path, "s", 0.0), read_number(arr[i], path, "T", 1.0),
                          read_positive(arr[i], path, "alpha", 1.0), read_number(arr[i], path, "x", 0.0),
                          read_number(arr[i], path, "y", 0.0)};
        if (!(p.T > p.s)) throw ConfigError(path + "T: must exceed s");
        cases.push_back(p);
    }
    return cases;
}

std::vector<TerminalCoupledProblem> read_coupled_cases(const json& doc) {
    if (!doc.contains("coupled_cases")) return default_coupled_cases();
    const auto& arr = doc["coupled_cases"];
    if (!arr.is_array()) throw ConfigError("coupled_cases: expected an array");
    std::vector<TerminalCoupledProblem> cases;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "coupled_cases[" + std::to_string(i) + "].";
        if (!arr[i].is_object()) throw ConfigError(path.substr(0, path.size() - 1) + ": expected an object");
        TerminalCoupledProblem p{read_number(arr[i], path, "s", 0.0), read_number(arr[i], path, "T", 1.0),
                                 read_number(arr[i], path, "theta", 0.0), read_number(arr[i], path, "phi0", 0.0),
                                 read_positive(arr[i], path, "delta", 1.0)};
        if (!(p.T > p.s)) throw ConfigError(path + "T: must exceed s");
        cases.push_back(p);
    }
    return cases;
}

}  // namespace

CommandOutput cmd_oracles(const RunConfig& config) {
    const json& doc = config.document;
    const std::size_t n = read_count(doc, "", "n", 4000, 2);
    const std::size_t base_n = read_count(doc, "", "convergence_base_n", 500, 2);
    const double endpoint_tol = read_positive(doc, "", "endpoint_tolerance", 1e-5);
    const double coupled_tol = read_positive(doc, "", "coupled_tolerance", 1e-3);
    const double ratio_limit = read_positive(doc, "", "ratio_limit", 0.3);
    const auto endpoint_cases = read_endpoint_cases(doc);
    const auto coupled_cases = read_coupled_cases(doc);

    CommandOutput out;
    out.report = report_header(config, "oracles");
    out.report["n"] = n;
    out.report["convergence_base_n"] = base_n;

    json endpoint_rows = json::array();
    for (const EndpointProblem& p : endpoint_cases) {
        const double closed = endpoint_min_value(p);
        const DiscreteSolution sol = endpoint_oracle(p, n);
        double sup_err = 0.0;
        for (std::size_t k = 0; k < sol.grid.size(); ++k) {
            sup_err = std::max(sup_err, std::fabs(sol.values[k] - endpoint_optimizer(p, sol.grid[k])));
        }
        json errors = json::array();
        json ratios = json::array();
        bool converging = true;
        double previous = 0.0;
        for (std::size_t level = 0, m = base_n; level < 3; ++level, m *= 2) {
            const double e = std::fabs(endpoint_oracle(p, m).objective - closed);
            errors.push_back(e);
            if (level > 0) {
                const double ratio = previous == 0.0 ? 0.0 : e / previous;
                ratios.push_back(ratio);
                converging = converging && ratio <= ratio_limit;
            }
            previous = e;
        }
        const double rel = relative_error(sol.objective, closed);
        const bool pass = rel <= endpoint_tol && converging && std::isfinite(sup_err);
        out.pass = out.pass && pass;
        endpoint_rows.push_back({{"s", p.s},
                                 {"T", p.T},
                                 {"alpha", p.alpha},
                                 {"x", p.x},
                                 {"y", p.y},
                                 {"closed_form", closed},
                                 {"discrete", sol.objective},
                                 {"relative_error", rel},
                                 {"sup_node_error", sup_err},
                                 {"convergence_errors", errors},
                                 {"convergence_ratios", ratios},
                                 {"pass", pass}});
    }
    out.report["endpoint"] = endpoint_rows;

    json coupled_rows = json::array();
    for (const TerminalCoupledProblem& p : coupled_cases) {
        json row = {{"s", p.s}, {"T", p.T}, {"theta", p.theta}, {"phi0", p.phi0}, {"delta", p.delta}};
        DiscreteSolution sol;
        try {
            sol = coupled_oracle(p, n);
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + " (coupled case delta=" + format_double(p.delta) +
                                  ", T-s=" + format_double(p.length()) + ", theta=" + format_double(p.theta) +
                                  ", phi0=" + format_double(p.phi0) + ")",
                              e.best_iterate(), e.relative_residual());
        }
        const double closed_integral = coupled_optimal_integral(p);
        const double integral_err = relative_error(sol.integral, closed_integral);
        bool pass = integral_err <= coupled_tol;
        row["closed_integral"] = closed_integral;
        row["discrete_integral"] = sol.integral;
        row["integral_relative_error"] = integral_err;
        row["discrete_objective"] = sol.objective;
        row["cg_iterations"] = sol.iterations;
        if (p.phi0 == 0.0) {
            const double closed_min = coupled_min_value(p);
            const double objective_err = relative_error(sol.objective, closed_min);
            row["closed_min_value"] = closed_min;
            row["objective_relative_error"] = objective_err;
            pass = pass && objective_err <= coupled_tol;
        }
        row["pass"] = pass;
        out.pass = out.pass && pass;
        coupled_rows.push_back(row);
    }
    out.report["coupled"] = coupled_rows;
    out.report["pass"] = out.pass;
    return out;
}

// ===========================================================================
// limits
// ===========================================================================

CommandOutput cmd_limits(const RunConfig& config) {
    const json& doc = config.document;
    const std::vector<double> deltas = read_number_list(doc, "", "deltas", {0.1, 0.5, 1.0, 2.0, 5.0, 20.0});
    const double scaled_t_large = read_positive(doc, "", "scaled_t_large", 1000.0);
    const double limit_tol = read_positive(doc, "", "limit_tolerance", 1e-6);
    const double cesaro_horizon = read_positive(doc, "", "cesaro_horizon", 200.0);
    const double cesaro_tol = read_positive(doc, "", "cesaro_tolerance", 2e-2);
    const double ce_delta = read_positive(doc, "", "ce_delta", 1.0);
    const double ce_horizon = read_positive(doc, "", "ce_horizon", 100.0);
    const double tol = read_positive(doc, "", "tolerance", 1e-8);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0) || !std::isfinite(deltas[i])) {
            throw ConfigError("deltas[" + std::to_string(i) + "]: must be a finite number > 0");
        }
    }

    const json& fr = read_object(doc, "", "frictionless");
    const std::string fp = "frictionless.";
    ModelParams fparams;
    fparams.delta = read_positive(fr, fp, "delta", 1e4);
    const double delta_ref = read_positive(fr, fp, "delta_reference", 1e3);
    fparams.horizon = read_positive(fr, fp, "horizon", 1.0);
    fparams.mu = read_number(fr, fp, "mu", 1.0);
    fparams.s0 = read_number(fr, fp, "s0", 0.0);
    const std::size_t f_steps = read_count(fr, fp, "n_steps", 20000, 1);
    const double fr_tol = read_positive(fr, fp, "tolerance", 0.05);
    if (fparams.delta < 1e3) throw ConfigError("frictionless.delta: must be >= 1000");
    if (delta_ref < 1e3) throw ConfigError("frictionless.delta_reference: must be >= 1000");

    CommandOutput out;
    out.report = report_header(config, "limits");

    json rows = json::array();
    for (double d : deltas) {
        const ValueShape shape(d);
        const double t_large = scaled_t_large / std::sqrt(1.0 + d);
        const double v_large = shape(t_large);
        const double cesaro = shape.integral(cesaro_horizon, tol) / cesaro_horizon;
        const double limit_gap = std::fabs(v_large - shape.limit());
        const double cesaro_gap = std::fabs(cesaro - shape.limit());
        const bool pass = limit_gap <= limit_tol && cesaro_gap <= cesaro_tol;
        out.pass = out.pass && pass;
        rows.push_back({{"delta", d},
                        {"limit", shape.limit()},
                        {"t_large", t_large},
                        {"V_t_large", v_large},
                        {"limit_gap", limit_gap},
                        {"cesaro_horizon", cesaro_horizon},
                        {"cesaro_mean", cesaro},
                        {"cesaro_gap", cesaro_gap},
                        {"pass", pass}});
    }
    out.report["value_shape"] = rows;

    {
        ModelParams p;
        p.delta = ce_delta;
        p.horizon = ce_horizon;
        const double rate = certainty_equivalent(p, tol) / ce_horizon;
        const double root = std::sqrt(1.0 + ce_delta);
        const double implied = -0.5 * (root - 1.0);
        const bool pass = std::fabs(rate - implied) <= cesaro_tol;
        out.pass = out.pass && pass;
        out.report["certainty_equivalent_rate"] = {{"delta", ce_delta},
                                                   {"horizon", ce_horizon},
                                                   {"c_over_T", rate},
                                                   {"limit_from_value_formula", implied},
                                                   {"limit_one_minus_root", 1.0 - root},
                                                   {"pass", pass}};
    }

    {
        const TimeGrid grid(0.0, fparams.horizon, f_steps);
        const FrictionlessDeviation main = frictionless_limit_check(fparams, grid, config.seed);
        ModelParams ref = fparams;
        ref.delta = delta_ref;
        const FrictionlessDeviation reference = frictionless_limit_check(ref, grid, config.seed);
        const double ratio = main.deviation / main.target_sup;
        const bool decreasing = main.deviation < reference.deviation;
        const bool pass = ratio <= fr_tol && decreasing;
        out.pass = out.pass && pass;
        out.report["frictionless"] = {{"model", model_json(fparams)},
                                      {"n_steps", f_steps},
                                      {"deviation", main.deviation},
                                      {"target_sup", main.target_sup},
                                      {"ratio", ratio},
                                      {"tolerance", fr_tol},
                                      {"delta_reference", delta_ref},
                                      {"deviation_reference", reference.deviation},
                                      {"ratio_reference", reference.deviation / reference.target_sup},
                                      {"decreasing", decreasing},
                                      {"pass", pass}};
    }
    out.report["pass"] = out.pass;
    return out;
}

}  // namespace ouimpact::cli
