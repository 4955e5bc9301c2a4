#pragma once

/**
 * @file cli.hpp
 * @brief Batch commands behind the `ouimpact` executable.
 *
 * Each command takes a parsed JSON run configuration and produces a JSON
 * report (plus optional CSV text). Reports contain no timestamps, so the same
 * configuration and seed always serialize to the same bytes.
 */

#include "ouimpact/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ouimpact::cli {

/// Exit codes of the executable.
enum ExitCode : int {
    kExitPass = 0,
    kExitValidation = 1,
    kExitAcceptance = 2,
    kExitInternal = 3,
};

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    nlohmann::json document;
    std::string digest;  ///< FNV-1a of the canonical (key-sorted, compact) document
    std::uint64_t seed = 0;
};

/// Parses a JSON object; a seed override replaces the document's "seed" field
/// before the digest is taken. Throws ConfigError on malformed input.
RunConfig parse_run_config(std::string_view text, std::optional<std::uint64_t> seed_override = {});

/// Reads and validates the "model" object.
ModelParams read_model(const nlohmann::json& document, std::string_view path = "model");

struct CommandOutput {
    nlohmann::json report;
    bool pass = true;
    std::string trace_csv;  ///< t,S,phi,Phi for path 0 (montecarlo only, when requested)
    std::string paths_csv;  ///< path_index,terminal_wealth,utility (montecarlo only, when requested)
};

struct MonteCarloOptions {
    unsigned workers = 0;
    bool want_trace = false;
    bool want_paths = false;
};

CommandOutput cmd_value(const RunConfig& config);
CommandOutput cmd_montecarlo(const RunConfig& config, const MonteCarloOptions& options = {});
CommandOutput cmd_oracles(const RunConfig& config);
CommandOutput cmd_limits(const RunConfig& config);

nlohmann::json to_json(const MonteCarloReport& report);

/// Pretty-printed JSON followed by a newline.
std::string serialize(const nlohmann::json& report);

}  // namespace ouimpact::cli
