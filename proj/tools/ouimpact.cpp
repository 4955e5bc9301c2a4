// Command-line front end: ouimpact <value|montecarlo|oracles|limits> --config <path> [options]

#include "ouimpact/cli.hpp"
#include "ouimpact/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace ouimpact;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cli::ConfigError("--config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal trading with linear temporary impact on an Ornstein-Uhlenbeck asset"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string trace_path;
    std::string paths_path;
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_path, "write the JSON report here instead of stdout");
        sub->add_option("--seed", seed, "override the configuration's seed");
    };
    auto* value = app.add_subcommand("value", "closed-form value, certainty equivalent and duality check");
    auto* mc = app.add_subcommand("montecarlo", "Monte Carlo verification of the optimal value");
    auto* oracles = app.add_subcommand("oracles", "closed forms vs discretized variational oracles");
    auto* limits = app.add_subcommand("limits", "asymptotic and frictionless-limit checks");
    for (auto* sub : {value, mc, oracles, limits}) add_common(sub);
    mc->add_option("--trace", trace_path, "CSV trace (t,S,phi,Phi) of path 0");
    mc->add_option("--paths", paths_path, "per-path CSV (path_index,terminal_wealth,utility)");
    mc->add_option("--workers", workers, "worker threads (0 = hardware concurrency); does not affect results");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kExitPass : cli::kExitValidation;
    }

    cli::CommandOutput result;
    try {
        const cli::RunConfig config = cli::parse_run_config(read_file(config_path), seed);
        if (*value) {
            result = cli::cmd_value(config);
        } else if (*mc) {
            cli::MonteCarloOptions opts;
            opts.workers = workers;
            opts.want_trace = !trace_path.empty();
            opts.want_paths = !paths_path.empty();
            result = cli::cmd_montecarlo(config, opts);
        } else if (*oracles) {
            result = cli::cmd_oracles(config);
        } else {
            result = cli::cmd_limits(config);
        }
    } catch (const cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitValidation;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitValidation;
    } catch (const UnsupportedCase& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return cli::kExitInternal;
    }

    try {
        const std::string text = cli::serialize(result.report);
        if (out_path.empty()) {
            std::cout << text;
        } else {
            write_file(out_path, text);
        }
        if (!trace_path.empty()) write_file(trace_path, result.trace_csv);
        if (!paths_path.empty()) write_file(paths_path, result.paths_csv);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return cli::kExitInternal;
    }
    return result.pass ? cli::kExitPass : cli::kExitAcceptance;
}
