#include "trails/verdict_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "trails/error.hpp"
#include "trails/scenario_partitioner.hpp"

namespace trails {

using nlohmann::json;

std::string_view to_string(VerdictLabel label) {
    switch (label) {
        case VerdictLabel::Correct: return "CORRECT";
        case VerdictLabel::Incorrect: return "INCORRECT";
        case VerdictLabel::Unparseable: return "UNPARSEABLE";
    }
    return "UNPARSEABLE";
}

std::string_view to_string(DecisionReason reason) {
    switch (reason) {
        case DecisionReason::Score: return "SCORE";
        case DecisionReason::EarlyStop: return "EARLY_STOP";
        case DecisionReason::NoValidInputs: return "NO_VALID_INPUTS";
    }
    return "NO_VALID_INPUTS";
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool matches_at(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (lower(text[pos + i]) != word[i]) return false;
    return true;
}

}  // namespace

VerdictLabel parse_verdict(std::string_view text) {
    constexpr std::string_view kCorrect = "correct";
    VerdictLabel last = VerdictLabel::Unparseable;
    for (std::size_t pos = 0; pos + kCorrect.size() <= text.size(); ++pos) {
        if (!matches_at(text, pos, kCorrect)) continue;
        const std::size_t end = pos + kCorrect.size();
        if (end < text.size() && is_word_char(text[end])) continue;
        if (pos >= 2 && matches_at(text, pos - 2, "in") &&
            (pos == 2 || !is_word_char(text[pos - 3]))) {
            last = VerdictLabel::Incorrect;
        } else if (pos == 0 || !is_word_char(text[pos - 1])) {
            last = VerdictLabel::Correct;
        }
    }
    return last;
}

Verdict verify_triplet(const TaskSpec& spec, const InputPayload& payload,
                       const SerializedOutput& output, std::string input_id,
                       const PromptLibrary& prompts, LlmSession& session) {
    // The verification template is validated to have no {code} placeholder,
    // so nothing here can leak the candidate source into the prompt.
    const auto messages = render(prompts.verify_triplet, {{"spec", spec.specification},
                                                          {"input", payload.render()},
                                                          {"output", output.text}});
    Verdict verdict;
    verdict.input_id = std::move(input_id);
    auto response = session.ask(Stage::Verify, messages);
    verdict.rationale = response.text;
    verdict.label = parse_verdict(response.text);
    if (verdict.label == VerdictLabel::Unparseable) {
        response = session.ask(Stage::Verify, with_format_reminder(messages, response.text));
        verdict.attempts = 2;
        verdict.rationale = response.text;
        verdict.label = parse_verdict(response.text);
    }
    return verdict;
}

std::optional<double> score(std::span<const Verdict> verdicts) {
    std::size_t correct = 0, decided = 0;
    for (const auto& v : verdicts) {
        if (v.label == VerdictLabel::Unparseable) continue;
        ++decided;
        if (v.label == VerdictLabel::Correct) ++correct;
    }
    if (decided == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(decided);
}

std::pair<Label, DecisionReason> decide(std::optional<double> score, double threshold,
                                        bool early_stopped, bool had_valid_inputs) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw InvalidThreshold("threshold must lie in [0, 1], got " + std::to_string(threshold));
    if (early_stopped) return {Label::Incorrect, DecisionReason::EarlyStop};
    if (!had_valid_inputs || !score) return {Label::Incorrect, DecisionReason::NoValidInputs};
    return {*score >= threshold ? Label::Correct : Label::Incorrect, DecisionReason::Score};
}

Assessment assess(const TaskSpec& spec, const Candidate& candidate, const PipelineConfig& config,
                  const PromptLibrary& prompts, Gateway& gateway, Executor& executor,
                  std::optional<std::int64_t> seed) {
    Assessment out;
    out.task_id = spec.task_id;
    out.candidate_id = candidate.candidate_id;
    out.threshold = config.threshold;

    // One session per stage family keeps per-stage output limits; all of them
    // accumulate into the candidate's token total.
    LlmSession scenario_session(gateway, config.params_for(Stage::Scenarios, seed), spec.task_id,
                                candidate.candidate_id);
    LlmSession property_session(gateway, config.params_for(Stage::Properties, seed), spec.task_id,
                                candidate.candidate_id);
    LlmSession input_session(gateway, config.params_for(Stage::InputGen, seed), spec.task_id,
                             candidate.candidate_id);
    LlmSession verify_session(gateway, config.params_for(Stage::Verify, seed), spec.task_id,
                              candidate.candidate_id);
    auto finish = [&](Assessment& a) {
        a.tokens = scenario_session.usage() + property_session.usage() + input_session.usage() +
                   verify_session.usage();
    };

    std::vector<Scenario> scenarios;
    CodeProperties properties;
    try {
        scenarios = extract_scenarios(spec, config.scenarios, prompts, scenario_session);
        properties = extract_code_properties(spec, candidate, prompts, property_session);
    } catch (const ScenarioParseError& e) {
        out.error = e.what();
    } catch (const PropertiesParseError& e) {
        out.error = e.what();
    }
    if (out.error) {
        std::tie(out.label, out.reason) = decide(std::nullopt, config.threshold, false, false);
        finish(out);
        return out;
    }
    out.scenario_count = scenarios.size();

    auto collected = collect_inputs(spec, candidate, scenarios, properties, config.forge(),
                                    prompts, input_session, executor);
    out.early_stopped = collected.early_stopped;

    bool had_valid_inputs = false;
    for (const auto& batch : collected.batches) {
        out.batches.push_back(BatchTrace{batch.scenario_index, batch.generate_calls,
                                         batch.repair_calls, batch.generated_total,
                                         batch.reduced.size(), batch.skipped});
        if (batch.skipped) ++out.skipped_scenarios;
        if (!batch.reduced.empty()) had_valid_inputs = true;
    }

    if (!collected.early_stopped) {
        for (const auto& batch : collected.batches) {
            for (const auto& input : batch.reduced) {
                const auto& output = *input.execution.output;
                out.inputs.push_back(AssessedInput{input.input_id, input.scenario_index,
                                                   input.payload, output, input.repair_count});
                out.verdicts.push_back(verify_triplet(spec, input.payload, output, input.input_id,
                                                      prompts, verify_session));
            }
        }
    }
    out.unparseable_verdicts = static_cast<std::size_t>(
        std::count_if(out.verdicts.begin(), out.verdicts.end(),
                      [](const Verdict& v) { return v.label == VerdictLabel::Unparseable; }));
    out.score = collected.early_stopped ? std::nullopt : score(out.verdicts);
    std::tie(out.label, out.reason) =
        decide(out.score, config.threshold, collected.early_stopped, had_valid_inputs);
    if (out.reason != DecisionReason::Score) out.score.reset();
    finish(out);
    return out;
}

BaselineVerdict zero_shot_cot(const TaskSpec& spec, const Candidate& candidate,
                              const PromptLibrary& prompts, LlmSession& session) {
    const auto messages =
        render(prompts.zero_shot_cot, {{"spec", spec.specification}, {"code", candidate.source_code}});
    const TokenUsage before = session.usage();
    BaselineVerdict out;
    auto response = session.ask(Stage::ZeroShotCot, messages);
    auto label = parse_verdict(response.text);
    if (label == VerdictLabel::Unparseable) {
        response = session.ask(Stage::ZeroShotCot, with_format_reminder(messages, response.text));
        out.attempts = 2;
        label = parse_verdict(response.text);
    }
    out.rationale = response.text;
    out.unparseable = label == VerdictLabel::Unparseable;
    out.label = label == VerdictLabel::Correct ? Label::Correct : Label::Incorrect;
    out.tokens.prompt_tokens = session.usage().prompt_tokens - before.prompt_tokens;
    out.tokens.completion_tokens = session.usage().completion_tokens - before.completion_tokens;
    return out;
}

json to_json(const Assessment& a) {
    json verdicts = json::array();
    for (const auto& v : a.verdicts)
        verdicts.push_back({{"input_id", v.input_id},
                            {"label", to_string(v.label)},
                            {"attempts", v.attempts},
                            {"rationale", v.rationale}});
    json inputs = json::array();
    for (const auto& i : a.inputs)
        inputs.push_back({{"input_id", i.input_id},
                          {"scenario_index", i.scenario_index},
                          {"repair_count", i.repair_count},
                          {"payload", to_json(i.payload)},
                          {"output", {{"kind", to_string(i.output.kind)}, {"text", i.output.text}}}});
    json batches = json::array();
    for (const auto& b : a.batches)
        batches.push_back({{"scenario_index", b.scenario_index},
                           {"generate_calls", b.generate_calls},
                           {"repair_calls", b.repair_calls},
                           {"generated_total", b.generated_total},
                           {"reduced", b.reduced},
                           {"skipped", b.skipped}});
    json j{{"task_id", a.task_id},
           {"candidate_id", a.candidate_id},
           {"label", to_string(a.label)},
           {"reason", to_string(a.reason)},
           {"score", a.score ? json(*a.score) : json(nullptr)},
           {"threshold", a.threshold},
           {"scenarios", a.scenario_count},
           {"skipped_scenarios", a.skipped_scenarios},
           {"early_stopped", a.early_stopped},
           {"unparseable_verdicts", a.unparseable_verdicts},
           {"tokens",
            {{"prompt_tokens", a.tokens.prompt_tokens},
             {"completion_tokens", a.tokens.completion_tokens}}},
           {"verdicts", std::move(verdicts)},
           {"inputs", std::move(inputs)},
           {"batches", std::move(batches)}};
    if (a.error) j["error"] = *a.error;
    return j;
}

std::vector<double> threshold_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw InvalidThreshold("grid step must lie in (0, 1]");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        double t = std::round(static_cast<double>(i) * step * 1e12) / 1e12;
        if (t > 1.0) break;
        grid.push_back(t);
    }
    if (grid.back() < 1.0) grid.push_back(1.0);
    return grid;
}

CalibrationResult calibrate(std::span<const ScoredCandidate> candidates,
                            std::span<const double> grid) {
    if (grid.empty()) throw InvalidThreshold("calibration grid is empty");
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());

    CalibrationResult result;
    std::optional<double> best;
    for (double tau : sorted) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidThreshold("grid value outside [0, 1]");
        SweepPoint point;
        point.threshold = tau;
        for (const auto& c : candidates) {
            const Label predicted =
                c.score && *c.score >= tau ? Label::Correct : Label::Incorrect;
            point.matrix.add(predicted, c.truth);
        }
        point.mcc = mcc(point.matrix);
        if (!best || point.mcc.value >= *best) {
            best = point.mcc.value;
            result.threshold = tau;
        }
        result.sweep.push_back(point);
    }
    return result;
}

}  // namespace trails
