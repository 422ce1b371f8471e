#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trails/config.hpp"
#include "trails/corpus.hpp"
#include "trails/evaluation_metrics.hpp"
#include "trails/exec_bridge.hpp"
#include "trails/input_forge.hpp"
#include "trails/llm_gateway.hpp"

namespace trails {

enum class VerdictLabel { Correct, Incorrect, Unparseable };
std::string_view to_string(VerdictLabel label);

struct Verdict {
    std::string input_id;
    VerdictLabel label = VerdictLabel::Unparseable;
    std::string rationale;
    int attempts = 1;
};

enum class DecisionReason { Score, EarlyStop, NoValidInputs };
std::string_view to_string(DecisionReason reason);

/// One verified input: what was fed to the candidate and what came out.
struct AssessedInput {
    std::string input_id;
    std::size_t scenario_index = 0;
    InputPayload payload;
    SerializedOutput output;
    std::size_t repair_count = 0;
};

struct BatchTrace {
    std::size_t scenario_index = 0;
    std::size_t generate_calls = 0;
    std::size_t repair_calls = 0;
    std::size_t generated_total = 0;
    std::size_t reduced = 0;
    bool skipped = false;
};

struct Assessment {
    std::string task_id;
    std::string candidate_id;
    std::optional<double> score;
    double threshold = 0.8;
    Label label = Label::Incorrect;
    DecisionReason reason = DecisionReason::NoValidInputs;
    std::vector<Verdict> verdicts;
    std::vector<AssessedInput> inputs;
    std::vector<BatchTrace> batches;
    std::size_t scenario_count = 0;
    std::size_t skipped_scenarios = 0;
    std::size_t unparseable_verdicts = 0;
    bool early_stopped = false;
    TokenUsage tokens;
    std::optional<std::string> error;
};

nlohmann::json to_json(const Assessment& assessment);

/// Label of the last standalone CORRECT / INCORRECT token (case-insensitive,
/// word-bounded); UNPARSEABLE when neither occurs.
VerdictLabel parse_verdict(std::string_view text);

/// Judges one (input, output, specification) triplet. The prompt never carries
/// candidate code. One retry when the answer has no verdict.
Verdict verify_triplet(const TaskSpec& spec, const InputPayload& payload,
                       const SerializedOutput& output, std::string input_id,
                       const PromptLibrary& prompts, LlmSession& session);

/// #CORRECT / (#CORRECT + #INCORRECT); nullopt when no verdict is binary.
std::optional<double> score(std::span<const Verdict> verdicts);

/// Early stop wins over everything, then a missing score; otherwise CORRECT
/// iff score >= threshold.
std::pair<Label, DecisionReason> decide(std::optional<double> score, double threshold,
                                        bool early_stopped, bool had_valid_inputs);

/// Runs the full pipeline for one candidate.
Assessment assess(const TaskSpec& spec, const Candidate& candidate, const PipelineConfig& config,
                  const PromptLibrary& prompts, Gateway& gateway, Executor& executor,
                  std::optional<std::int64_t> seed = std::nullopt);

struct BaselineVerdict {
    Label label = Label::Incorrect;
    bool unparseable = false;
    std::string rationale;
    int attempts = 1;
    TokenUsage tokens;
};

/// Single-call judgment over specification + code.
BaselineVerdict zero_shot_cot(const TaskSpec& spec, const Candidate& candidate,
                              const PromptLibrary& prompts, LlmSession& session);

// ---------------------------------------------------------------------------
// Threshold calibration

struct ScoredCandidate {
    std::optional<double> score;  // nullopt: always predicted INCORRECT
    Label truth = Label::Incorrect;
};

struct SweepPoint {
    double threshold = 0.0;
    ConfusionMatrix matrix;
    Metric mcc;
};

struct CalibrationResult {
    double threshold = 0.0;
    std::vector<SweepPoint> sweep;
};

/// Grid 0, step, 2·step, ..., 1 (inclusive).
std::vector<double> threshold_grid(double step);

/// Picks the MCC-maximizing threshold; ties go to the higher threshold.
CalibrationResult calibrate(std::span<const ScoredCandidate> candidates,
                            std::span<const double> grid);

}  // namespace trails
