#include "trails/runner.hpp"

#include "trails/error.hpp"

namespace trails {

std::vector<CandidateRef> flatten(const std::vector<CorpusRecord>& records) {
    std::vector<CandidateRef> refs;
    for (const auto& r : records)
        for (const auto& c : r.candidates) refs.push_back(CandidateRef{&r.task, &c});
    return refs;
}

namespace {

TrailsOutcome assess_one(const CandidateRef& ref, const PipelineConfig& config,
                         const PromptLibrary& prompts, Gateway& gateway, Executor& executor,
                         std::optional<std::int64_t> seed) {
    TrailsOutcome out;
    try {
        out.assessment = assess(*ref.task, *ref.candidate, config, prompts, gateway, executor, seed);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

BaselineOutcome baseline_one(const CandidateRef& ref, const PipelineConfig& config,
                             const PromptLibrary& prompts, Gateway& gateway,
                             std::optional<std::int64_t> seed) {
    BaselineOutcome out;
    try {
        LlmSession session(gateway, config.params_for(Stage::ZeroShotCot, seed),
                           ref.task->task_id, ref.candidate->candidate_id);
        out.verdict = zero_shot_cot(*ref.task, *ref.candidate, prompts, session);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

std::vector<TrailsOutcome> assess_corpus_serial(const std::vector<CandidateRef>& candidates,
                                                const PipelineConfig& config,
                                                const PromptLibrary& prompts, Gateway& gateway,
                                                Executor& executor,
                                                std::optional<std::int64_t> seed) {
    std::vector<TrailsOutcome> out;
    out.reserve(candidates.size());
    for (const auto& ref : candidates)
        out.push_back(assess_one(ref, config, prompts, gateway, executor, seed));
    return out;
}

std::vector<TrailsOutcome> assess_corpus(const std::vector<CandidateRef>& candidates,
                                         const PipelineConfig& config, const PromptLibrary& prompts,
                                         Gateway& gateway, Executor& executor,
                                         std::optional<std::int64_t> seed) {
    if (config.workers <= 1)
        return assess_corpus_serial(candidates, config, prompts, gateway, executor, seed);
    std::vector<TrailsOutcome> out(candidates.size());
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(config.workers))
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[i] = assess_one(candidates[i], config, prompts, gateway, executor, seed);
    return out;
}

std::vector<BaselineOutcome> baseline_corpus_serial(const std::vector<CandidateRef>& candidates,
                                                    const PipelineConfig& config,
                                                    const PromptLibrary& prompts, Gateway& gateway,
                                                    std::optional<std::int64_t> seed) {
    std::vector<BaselineOutcome> out;
    out.reserve(candidates.size());
    for (const auto& ref : candidates) out.push_back(baseline_one(ref, config, prompts, gateway, seed));
    return out;
}

std::vector<BaselineOutcome> baseline_corpus(const std::vector<CandidateRef>& candidates,
                                             const PipelineConfig& config,
                                             const PromptLibrary& prompts, Gateway& gateway,
                                             std::optional<std::int64_t> seed) {
    if (config.workers <= 1) return baseline_corpus_serial(candidates, config, prompts, gateway, seed);
    std::vector<BaselineOutcome> out(candidates.size());
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(config.workers))
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = baseline_one(candidates[i], config, prompts, gateway, seed);
    return out;
}

namespace {

RunEntry base_entry(const CandidateRef& ref) {
    if (!ref.candidate->ground_truth)
        throw ConfigError("candidate " + ref.task->task_id + "/" + ref.candidate->candidate_id +
                          " has no ground_truth; evaluation needs a labeled corpus");
    RunEntry e;
    e.task_id = ref.task->task_id;
    e.candidate_id = ref.candidate->candidate_id;
    e.ground_truth = *ref.candidate->ground_truth;
    return e;
}

}  // namespace

RunRecord to_run_record(const std::string& approach, std::size_t run_index,
                        const std::vector<CandidateRef>& candidates,
                        const std::vector<TrailsOutcome>& outcomes) {
    RunRecord run{approach, run_index, {}};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RunEntry e = base_entry(candidates[i]);
        if (const auto& a = outcomes[i].assessment) {
            e.predicted = a->label;
            e.tokens = a->tokens;
            e.score = a->score;
            e.reason = std::string(to_string(a->reason));
        } else {
            e.predicted = Label::Incorrect;
            e.reason = "ERROR";
        }
        run.entries.push_back(std::move(e));
    }
    return run;
}

RunRecord to_run_record(const std::string& approach, std::size_t run_index,
                        const std::vector<CandidateRef>& candidates,
                        const std::vector<BaselineOutcome>& outcomes) {
    RunRecord run{approach, run_index, {}};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        RunEntry e = base_entry(candidates[i]);
        if (const auto& v = outcomes[i].verdict) {
            e.predicted = v->label;
            e.tokens = v->tokens;
            if (v->unparseable) e.reason = "UNPARSEABLE";
        } else {
            e.predicted = Label::Incorrect;
            e.reason = "ERROR";
        }
        run.entries.push_back(std::move(e));
    }
    return run;
}

std::vector<std::pair<Metric, Metric>> metrics_for_runs_serial(std::span<const RunRecord> runs) {
    std::vector<std::pair<Metric, Metric>> out;
    out.reserve(runs.size());
    for (const auto& run : runs) {
        const auto m = confusion(run);
        out.emplace_back(mcc(m), p4(m));
    }
    return out;
}

std::vector<std::pair<Metric, Metric>> metrics_for_runs(std::span<const RunRecord> runs, int threads) {
    std::vector<std::pair<Metric, Metric>> out(runs.size());
    const auto n = static_cast<std::ptrdiff_t>(runs.size());
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto m = confusion(runs[i]);
        out[i] = {mcc(m), p4(m)};
    }
    return out;
}

}  // namespace trails
