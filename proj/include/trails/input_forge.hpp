#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trails/corpus.hpp"
#include "trails/exec_bridge.hpp"
#include "trails/llm_gateway.hpp"
#include "trails/scenario_partitioner.hpp"

namespace trails {

struct TestInput {
    std::string input_id;
    std::size_t scenario_index = 0;
    InputPayload payload;
    std::size_t repair_count = 0;
    bool validated = false;
    ExecutionResult execution;  // the validating run; reused for verification
};

struct InputBatch {
    std::size_t scenario_index = 0;
    std::size_t generated_total = 0;  // validated inputs before coverage dedup
    std::vector<TestInput> reduced;
    bool skipped = false;
    std::size_t generate_calls = 0;
    std::size_t repair_calls = 0;
};

struct ForgeConfig {
    std::size_t repair_budget = 3;        // generate + repair attempts per scenario
    std::size_t inputs_per_scenario = 3;
    std::size_t early_stop_after = 2;     // consecutive skipped scenarios
    int timeout_ms = 10000;
};

struct CollectResult {
    std::vector<InputBatch> batches;
    bool early_stopped = false;
};

/// Output-format instructions appended to generation and repair prompts.
std::string input_format_instructions(const TaskSpec& spec);

/// Extracts the payload from the last fenced block of an answer. STDIN tasks
/// take the block verbatim; CALL tasks need a JSON array, an {"args": [...]}
/// object or an `entry(arg, ...)` call expression.
InputPayload parse_input_payload(std::string_view answer, const TaskSpec& spec);

/// `reprompts` extra attempts are made on an unparseable answer.
InputPayload generate_input(const Scenario& scenario, const CodeProperties& properties,
                            const TaskSpec& spec, const PromptLibrary& prompts,
                            LlmSession& session, int reprompts = 1);

InputPayload repair_input(const InputPayload& payload, std::string_view error_text,
                          const Scenario& scenario, const CodeProperties& properties,
                          const TaskSpec& spec, const PromptLibrary& prompts,
                          LlmSession& session, int reprompts = 1);

ExecutionResult validate_input(const InputPayload& payload, const TaskSpec& spec,
                               const Candidate& candidate, Executor& executor, int timeout_ms);

/// Only a normal termination makes an input valid; CRASH and TIMEOUT do not.
inline bool is_valid(const ExecutionResult& result) { return result.status == ExecStatus::Ok; }

/// Keeps the first input of every distinct coverage set, in order, up to
/// `cap`. An input without coverage is never merged with another one.
std::vector<TestInput> dedup_by_coverage(
    const std::vector<std::pair<TestInput, std::optional<CoverageSet>>>& inputs, std::size_t cap);

/// Generate / validate / repair loop over the scenarios, with early stopping.
CollectResult collect_inputs(const TaskSpec& spec, const Candidate& candidate,
                             const std::vector<Scenario>& scenarios,
                             const CodeProperties& properties, const ForgeConfig& config,
                             const PromptLibrary& prompts, LlmSession& session,
                             Executor& executor);

}  // namespace trails
