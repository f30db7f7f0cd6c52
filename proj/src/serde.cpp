#include "lcseq/serde.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "lcseq/errors.hpp"

namespace lcseq {

using nlohmann::json;

std::string fit_report_to_json(const MleFitReport& report) {
    std::ostringstream os;
    os << "{\"knots\":[";
    const auto& knots = report.density.knots();
    const auto& phi = report.density.phi();
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (i) os << ',';
        os << format_double(knots[i]);
    }
    os << "],\"phi\":[";
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (i) os << ',';
        os << format_double(phi[i]);
    }
    os << "],\"loglik\":" << format_double(report.loglik)
       << ",\"gap\":" << format_double(report.gap)
       << ",\"iterations\":" << report.iterations
       << ",\"converged\":" << (report.converged ? "true" : "false") << "}";
    return os.str();
}

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw InputError(path + ": " + what);
}

EstimatorSpec parse_estimator(const json& j) {
    EstimatorSpec spec;
    if (!j.is_object()) field_error("estimator", "must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key != "variant" && key != "bandwidth" && key != "max_iter" && key != "tol" &&
            key != "restarts" && key != "mu") {
            field_error("estimator." + key, "unknown field");
        }
    }
    if (!j.contains("variant") || !j["variant"].is_string()) {
        field_error("estimator.variant", "required string (KDE, GMM2 or ORACLE)");
    }
    const std::string variant = j["variant"].get<std::string>();
    if (variant == "KDE") {
        spec.variant = EstimatorVariant::kde;
    } else if (variant == "GMM2") {
        spec.variant = EstimatorVariant::gmm2;
    } else if (variant == "ORACLE") {
        spec.variant = EstimatorVariant::oracle;
    } else {
        field_error("estimator.variant", "must be KDE, GMM2 or ORACLE");
    }
    if (j.contains("bandwidth")) {
        const json& b = j["bandwidth"];
        if (b.is_string()) {
            if (b.get<std::string>() != "silverman") {
                field_error("estimator.bandwidth", "string value must be \"silverman\"");
            }
            spec.bandwidth_rule = BandwidthRule::silverman;
        } else if (b.is_number()) {
            spec.bandwidth_rule = BandwidthRule::fixed;
            spec.fixed_bandwidth = b.get<double>();
        } else {
            field_error("estimator.bandwidth", "must be \"silverman\" or a positive number");
        }
    }
    if (j.contains("max_iter")) {
        if (!j["max_iter"].is_number_integer()) field_error("estimator.max_iter", "must be an integer");
        spec.gmm_max_iter = j["max_iter"].get<int>();
    }
    if (j.contains("tol")) {
        if (!j["tol"].is_number()) field_error("estimator.tol", "must be a number");
        spec.gmm_tol = j["tol"].get<double>();
    }
    if (j.contains("restarts")) {
        if (!j["restarts"].is_number_integer()) field_error("estimator.restarts", "must be an integer");
        spec.gmm_restarts = j["restarts"].get<int>();
    }
    if (j.contains("mu")) {
        if (!j["mu"].is_number()) field_error("estimator.mu", "must be a number");
        spec.oracle_mu = j["mu"].get<double>();
    }
    if (spec.variant == EstimatorVariant::oracle && !j.contains("mu")) {
        field_error("estimator.mu", "required for the ORACLE variant");
    }
    return spec;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config: top level must be an object");

    ExperimentConfig config;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key != "mu_values" && key != "alpha" && key != "horizon" && key != "interval" &&
            key != "schedule" && key != "reps" && key != "estimator" && key != "checkpoints" &&
            key != "base_seed" && key != "mle_tol") {
            field_error(key, "unknown field");
        }
    }

    if (!j.contains("mu_values") || !j["mu_values"].is_array()) {
        field_error("mu_values", "required array of nonnegative numbers");
    }
    for (const json& v : j["mu_values"]) {
        if (!v.is_number()) field_error("mu_values", "entries must be numbers");
        config.mu_values.push_back(v.get<double>());
    }
    if (j.contains("alpha")) {
        if (!j["alpha"].is_number()) field_error("alpha", "must be a number");
        config.alpha = j["alpha"].get<double>();
    }
    if (!j.contains("horizon") || !j["horizon"].is_number_integer()) {
        field_error("horizon", "required integer");
    }
    config.horizon = j["horizon"].get<int64_t>();
    if (j.contains("interval")) {
        if (!j["interval"].is_number_integer()) field_error("interval", "must be an integer");
        config.interval = j["interval"].get<int64_t>();
    }
    if (j.contains("schedule")) {
        if (!j["schedule"].is_array()) field_error("schedule", "must be an array of integers");
        for (const json& v : j["schedule"]) {
            if (!v.is_number_integer()) field_error("schedule", "entries must be integers");
            config.schedule.push_back(v.get<int64_t>());
        }
    }
    if (!j.contains("reps") || !j["reps"].is_number_integer()) {
        field_error("reps", "required integer");
    }
    config.reps = j["reps"].get<int64_t>();
    if (!j.contains("estimator")) field_error("estimator", "required object");
    config.estimator = parse_estimator(j["estimator"]);
    if (j.contains("checkpoints")) {
        if (!j["checkpoints"].is_array()) field_error("checkpoints", "must be an array of integers");
        config.checkpoints.clear();
        for (const json& v : j["checkpoints"]) {
            if (!v.is_number_integer()) field_error("checkpoints", "entries must be integers");
            config.checkpoints.push_back(v.get<int64_t>());
        }
    } else {
        // default checkpoints truncated to the horizon
        std::vector<int64_t> defaults;
        for (int64_t cp : config.checkpoints) {
            if (cp <= config.horizon) defaults.push_back(cp);
        }
        if (defaults.empty()) defaults.push_back(config.horizon);
        config.checkpoints = std::move(defaults);
    }
    if (j.contains("base_seed")) {
        if (!j["base_seed"].is_number_unsigned() && !j["base_seed"].is_number_integer()) {
            field_error("base_seed", "must be a nonnegative integer");
        }
        config.base_seed = j["base_seed"].get<uint64_t>();
    }
    if (j.contains("mle_tol")) {
        if (!j["mle_tol"].is_number()) field_error("mle_tol", "must be a number");
        config.mle_tol = j["mle_tol"].get<double>();
    }
    config.validate();
    return config;
}

std::vector<double> parse_stream(std::istream& is) {
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const std::size_t end = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(begin, end - begin + 1);
        try {
            std::size_t consumed = 0;
            const double value = std::stod(token, &consumed);
            if (consumed != token.size() || !std::isfinite(value)) throw std::invalid_argument("");
            values.push_back(value);
        } catch (const std::exception&) {
            throw InputError("parse error at line " + std::to_string(lineno) + ": '" + token + "'");
        }
    }
    return values;
}

} // namespace lcseq
