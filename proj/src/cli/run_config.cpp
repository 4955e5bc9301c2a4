#include "ouimpact/cli.hpp"

#include "ouimpact/digest.hpp"
#include "ouimpact/errors.hpp"

#include <cmath>
#include <string>

namespace ouimpact::cli {

RunConfig parse_run_config(std::string_view text, std::optional<std::uint64_t> seed_override) {
    RunConfig config;
    try {
        config.document = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("<document>: malformed JSON: ") + e.what());
    }
    if (!config.document.is_object()) throw ConfigError("<document>: expected a JSON object");

    if (seed_override) config.document["seed"] = *seed_override;
    if (config.document.contains("seed")) {
        const auto& s = config.document["seed"];
        if (!s.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
        config.seed = s.get<std::uint64_t>();
    }
    config.digest = fnv1a_hex(config.document.dump());
    return config;
}

ModelParams read_model(const nlohmann::json& document, std::string_view path) {
    const std::string prefix(path);
    if (!document.contains(prefix) || !document[prefix].is_object()) {
        throw ConfigError(prefix + ": expected an object");
    }
    const auto& m = document[prefix];
    auto number = [&](const char* key, std::optional<double> fallback) {
        const std::string field = prefix + "." + key;
        if (!m.contains(key)) {
            if (fallback) return *fallback;
            throw ConfigError(field + ": required field is missing");
        }
        if (!m[key].is_number()) throw ConfigError(field + ": expected a number");
        const double v = m[key].get<double>();
        if (!std::isfinite(v)) throw ConfigError(field + ": must be finite");
        return v;
    };
    ModelParams p;
    p.mu = number("mu", std::nullopt);
    p.s0 = number("s0", std::nullopt);
    p.delta = number("delta", std::nullopt);
    p.horizon = number("horizon", std::nullopt);
    p.phi0 = number("phi0", 0.0);
    if (!(p.delta > 0.0)) throw ConfigError(prefix + ".delta: must be > 0");
    if (!(p.horizon > 0.0)) throw ConfigError(prefix + ".horizon: must be > 0");
    return p;
}

std::string serialize(const nlohmann::json& report) { return report.dump(2) + "\n"; }

}  // namespace ouimpact::cli
