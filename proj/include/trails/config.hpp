#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trails/input_forge.hpp"
#include "trails/llm_gateway.hpp"

namespace trails {

enum class BackendKind { Live, Mock };

struct PipelineConfig {
    // Pipeline hyperparameters.
    std::size_t scenarios = 3;
    std::size_t repair_budget = 3;
    std::size_t inputs_per_scenario = 3;
    double threshold = 0.8;
    std::size_t early_stop_after = 2;
    int timeout_ms = 10000;
    double temperature = 0.5;
    std::size_t reruns = 3;
    std::size_t workers = 1;
    std::int64_t base_seed = 0;

    // LLM access.
    BackendKind backend = BackendKind::Live;
    std::string endpoint = "http://localhost:8000/v1/chat/completions";
    std::string model = "default";
    std::string api_key_env = "TRAILS_API_KEY";
    int retry_attempts = 3;
    int retry_backoff_ms = 1000;
    int request_timeout_s = 300;
    std::filesystem::path mock_script;
    std::filesystem::path templates_dir;  // empty: built-in templates

    // Harness.
    std::filesystem::path harness;
    std::vector<std::string> harness_args;
    std::size_t harness_pool = 4;
    int harness_grace_ms = 500;

    // Completion limits per stage.
    std::map<Stage, int> max_output_tokens{{Stage::Scenarios, 1024},  {Stage::Properties, 1024},
                                           {Stage::InputGen, 1024},   {Stage::InputRepair, 1024},
                                           {Stage::Verify, 2048},     {Stage::ZeroShotCot, 4096}};

    ForgeConfig forge() const;
    LlmParams params_for(Stage stage, std::optional<std::int64_t> seed = std::nullopt) const;

    /// Throws ConfigError on any out-of-range value.
    void validate() const;

    /// Applies one `key = value` setting; unknown keys are errors.
    void set(const std::string& key, const std::string& value);
};

/// Reads a key/value config file (INI syntax, no sections needed).
PipelineConfig load_config(const std::filesystem::path& path);

/// Threshold presets reported next to the configured one.
inline constexpr double kThresholdPresets[] = {0.6, 0.7, 0.8};

}  // namespace trails
