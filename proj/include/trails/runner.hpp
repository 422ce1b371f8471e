#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trails/config.hpp"
#include "trails/corpus.hpp"
#include "trails/evaluation_metrics.hpp"
#include "trails/exec_bridge.hpp"
#include "trails/llm_gateway.hpp"
#include "trails/verdict_engine.hpp"

// Corpus-level drivers. Each has an OpenMP version parallel over candidates
// (config.workers threads) and a serial reference used by the tests and the
// benchmark. Both produce results in corpus order.
namespace trails {

struct CandidateRef {
    const TaskSpec* task = nullptr;
    const Candidate* candidate = nullptr;
};

std::vector<CandidateRef> flatten(const std::vector<CorpusRecord>& records);

struct TrailsOutcome {
    std::optional<Assessment> assessment;
    std::string error;  // operational failure (transport, harness, script)
};

struct BaselineOutcome {
    std::optional<BaselineVerdict> verdict;
    std::string error;
};

std::vector<TrailsOutcome> assess_corpus(const std::vector<CandidateRef>& candidates,
                                         const PipelineConfig& config, const PromptLibrary& prompts,
                                         Gateway& gateway, Executor& executor,
                                         std::optional<std::int64_t> seed = std::nullopt);

std::vector<TrailsOutcome> assess_corpus_serial(const std::vector<CandidateRef>& candidates,
                                                const PipelineConfig& config,
                                                const PromptLibrary& prompts, Gateway& gateway,
                                                Executor& executor,
                                                std::optional<std::int64_t> seed = std::nullopt);

std::vector<BaselineOutcome> baseline_corpus(const std::vector<CandidateRef>& candidates,
                                             const PipelineConfig& config,
                                             const PromptLibrary& prompts, Gateway& gateway,
                                             std::optional<std::int64_t> seed = std::nullopt);

std::vector<BaselineOutcome> baseline_corpus_serial(const std::vector<CandidateRef>& candidates,
                                                    const PipelineConfig& config,
                                                    const PromptLibrary& prompts, Gateway& gateway,
                                                    std::optional<std::int64_t> seed = std::nullopt);

/// Candidates without ground truth are rejected; operational failures enter
/// the record as INCORRECT with reason "ERROR".
RunRecord to_run_record(const std::string& approach, std::size_t run_index,
                        const std::vector<CandidateRef>& candidates,
                        const std::vector<TrailsOutcome>& outcomes);
RunRecord to_run_record(const std::string& approach, std::size_t run_index,
                        const std::vector<CandidateRef>& candidates,
                        const std::vector<BaselineOutcome>& outcomes);

/// Per-run metric sweep over many runs: serial and OpenMP variants.
std::vector<std::pair<Metric, Metric>> metrics_for_runs_serial(std::span<const RunRecord> runs);
std::vector<std::pair<Metric, Metric>> metrics_for_runs(std::span<const RunRecord> runs, int threads);

}  // namespace trails
