#include "trails/config.hpp"

#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

ForgeConfig PipelineConfig::forge() const {
    return ForgeConfig{repair_budget, inputs_per_scenario, early_stop_after, timeout_ms};
}

LlmParams PipelineConfig::params_for(Stage stage, std::optional<std::int64_t> seed) const {
    LlmParams p;
    p.model_name = model;
    p.temperature = temperature;
    p.seed = seed;
    p.max_output_tokens = max_output_tokens.at(stage);
    return p;
}

void PipelineConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
    };
    positive(scenarios, "scenarios");
    positive(repair_budget, "repair_budget");
    positive(inputs_per_scenario, "inputs_per_scenario");
    positive(early_stop_after, "early_stop_after");
    positive(reruns, "reruns");
    positive(workers, "workers");
    positive(harness_pool, "harness_pool");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw ConfigError("temperature must be >= 0");
    if (timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
    if (retry_attempts < 1) throw ConfigError("retry_attempts must be >= 1");
    if (retry_backoff_ms < 0) throw ConfigError("retry_backoff_ms must be >= 0");
    if (harness_grace_ms < 0) throw ConfigError("harness_grace_ms must be >= 0");
    for (const auto& [stage, limit] : max_output_tokens)
        if (limit < 1) throw ConfigError("max_output_tokens must be >= 1");
    if (backend == BackendKind::Mock && mock_script.empty())
        throw ConfigError("backend = mock requires mock_script");
}

namespace {

std::size_t to_count(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        auto v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
}

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        auto v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
}

double to_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        auto v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

}  // namespace

void PipelineConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key(text::trim(raw_key));
    const std::string value(text::trim(raw_value));

    if (key == "scenarios") scenarios = to_count(key, value);
    else if (key == "repair_budget") repair_budget = to_count(key, value);
    else if (key == "inputs_per_scenario") inputs_per_scenario = to_count(key, value);
    else if (key == "threshold") threshold = to_real(key, value);
    else if (key == "early_stop_after") early_stop_after = to_count(key, value);
    else if (key == "timeout_ms") timeout_ms = to_int(key, value);
    else if (key == "temperature") temperature = to_real(key, value);
    else if (key == "reruns") reruns = to_count(key, value);
    else if (key == "workers") workers = to_count(key, value);
    else if (key == "seed") base_seed = to_int(key, value);
    else if (key == "backend") {
        if (value == "live") backend = BackendKind::Live;
        else if (value == "mock") backend = BackendKind::Mock;
        else throw ConfigError("backend must be 'live' or 'mock'");
    } else if (key == "endpoint") endpoint = value;
    else if (key == "model") model = value;
    else if (key == "api_key_env") api_key_env = value;
    else if (key == "retry_attempts") retry_attempts = to_int(key, value);
    else if (key == "retry_backoff_ms") retry_backoff_ms = to_int(key, value);
    else if (key == "request_timeout_s") request_timeout_s = to_int(key, value);
    else if (key == "mock_script") mock_script = value;
    else if (key == "templates_dir") templates_dir = value;
    else if (key == "harness") harness = value;
    else if (key == "harness_args") {
        harness_args.clear();
        std::istringstream words(value);
        for (std::string w; words >> w;) harness_args.push_back(w);
    } else if (key == "harness_pool") harness_pool = to_count(key, value);
    else if (key == "harness_grace_ms") harness_grace_ms = to_int(key, value);
    else if (key.starts_with("max_output_tokens.")) {
        auto stage = parse_stage(key.substr(std::string_view("max_output_tokens.").size()));
        if (!stage) throw ConfigError("unknown stage in " + key);
        max_output_tokens[*stage] = to_int(key, value);
    } else if (key == "max_output_tokens") {
        const int limit = to_int(key, value);
        for (auto& [stage, v] : max_output_tokens) v = limit;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    PipelineConfig config;
    const auto base = path.parent_path();
    for (const auto& [key, node] : tree) {
        if (!node.empty()) throw ConfigError("config sections are not supported: [" + key + "]");
        config.set(key, node.data());
    }
    // Relative paths in a config file are resolved against the file's directory.
    // A bare harness name is left alone so it can be found on PATH.
    for (auto* p : {&config.mock_script, &config.templates_dir})
        if (!p->empty() && p->is_relative()) *p = base / *p;
    if (config.harness.is_relative() && config.harness.string().find('/') != std::string::npos)
        config.harness = base / config.harness;
    return config;
}

}  // namespace trails
