#include "trails/input_forge.hpp"

#include <algorithm>
#include <regex>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

using nlohmann::json;

std::string input_format_instructions(const TaskSpec& spec) {
    if (spec.input_mode == InputMode::Stdin)
        return "Write the complete standard input of the program inside one fenced code block "
               "(```), exactly as it must be typed, and nothing else inside the block.";
    return "The program is invoked as " + spec.entry_point.value_or("the entry point") +
           "(...). Write its positional arguments as a JSON array inside one fenced code block "
           "(```), for example:\n```\n[3, \"abc\", [1, 2]]\n```";
}

namespace {

std::optional<std::string> last_fenced_block(std::string_view answer) {
    std::optional<std::vector<std::string_view>> last;
    std::optional<std::vector<std::string_view>> current;
    for (auto line : text::split_lines(answer)) {
        if (text::trim(line).starts_with("```")) {
            if (current) {
                last = std::move(current);
                current.reset();
            } else {
                current.emplace();
            }
            continue;
        }
        if (current) current->push_back(line);
    }
    if (current) last = std::move(current);  // unterminated fence runs to the end
    if (!last) return std::nullopt;
    std::string block;
    for (std::size_t i = 0; i < last->size(); ++i) {
        if (i) block.push_back('\n');
        block.append((*last)[i]);
    }
    return block;
}

std::optional<json> parse_args(const std::string& block) {
    auto body = std::string(text::trim(block));
    // entry(arg, ...) or Type().entry(arg, ...) call expression.
    static const std::regex call(R"(^[A-Za-z_][\w.()]*\((.*)\)\s*;?$)");
    std::smatch m;
    if (!body.empty() && body.front() != '[' && body.front() != '{' &&
        std::regex_match(body, m, call))
        body = "[" + m[1].str() + "]";
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    if (parsed.is_array()) return parsed;
    if (parsed.is_object() && parsed.contains("args") && parsed["args"].is_array())
        return parsed["args"];
    return std::nullopt;
}

}  // namespace

InputPayload parse_input_payload(std::string_view answer, const TaskSpec& spec) {
    auto block = last_fenced_block(answer);
    if (!block) throw InputParseError("answer contains no fenced input block");
    if (spec.input_mode == InputMode::Stdin) {
        if (text::trim(*block).empty()) throw InputParseError("fenced input block is empty");
        return InputPayload::from_stdin(std::move(*block));
    }
    auto args = parse_args(*block);
    if (!args) throw InputParseError("fenced block is not a JSON argument list");
    return InputPayload::from_args(std::move(*args));
}

namespace {

InputPayload ask_for_payload(Stage stage, const Messages& messages, const TaskSpec& spec,
                             LlmSession& session, int reprompts) {
    auto response = session.ask(stage, messages);
    for (int extra = 0;; ++extra) {
        try {
            return parse_input_payload(response.text, spec);
        } catch (const InputParseError&) {
            if (extra >= reprompts) throw;
        }
        response = session.ask(stage, with_format_reminder(messages, response.text));
    }
}

}  // namespace

InputPayload generate_input(const Scenario& scenario, const CodeProperties& properties,
                            const TaskSpec& spec, const PromptLibrary& prompts,
                            LlmSession& session, int reprompts) {
    const auto messages = render(prompts.input_gen, {{"spec", spec.specification},
                                                     {"scenario", scenario.render()},
                                                     {"properties", properties.render()},
                                                     {"input_format", input_format_instructions(spec)}});
    return ask_for_payload(Stage::InputGen, messages, spec, session, reprompts);
}

InputPayload repair_input(const InputPayload& payload, std::string_view error_text,
                          const Scenario& scenario, const CodeProperties& properties,
                          const TaskSpec& spec, const PromptLibrary& prompts,
                          LlmSession& session, int reprompts) {
    if (text::trim(error_text).empty()) throw ConfigError("repair requires a non-empty error text");
    const auto messages = render(prompts.input_repair, {{"spec", spec.specification},
                                                        {"scenario", scenario.render()},
                                                        {"properties", properties.render()},
                                                        {"input", payload.render()},
                                                        {"error", std::string(error_text)},
                                                        {"input_format", input_format_instructions(spec)}});
    return ask_for_payload(Stage::InputRepair, messages, spec, session, reprompts);
}

ExecutionResult validate_input(const InputPayload& payload, const TaskSpec& spec,
                               const Candidate& candidate, Executor& executor, int timeout_ms) {
    ExecutionRequest request;
    request.mode = spec.input_mode;
    request.source_code = candidate.source_code;
    request.entry_point = spec.entry_point;
    request.payload = payload;
    request.timeout_ms = timeout_ms;
    request.collect_coverage = true;
    return executor.run(request);
}

std::vector<TestInput> dedup_by_coverage(
    const std::vector<std::pair<TestInput, std::optional<CoverageSet>>>& inputs, std::size_t cap) {
    std::vector<TestInput> kept;
    std::vector<CoverageSet> seen;
    for (const auto& [input, coverage] : inputs) {
        if (kept.size() >= cap) break;
        if (coverage) {
            if (std::find(seen.begin(), seen.end(), *coverage) != seen.end()) continue;
            seen.push_back(*coverage);
        }
        kept.push_back(input);
    }
    return kept;
}

namespace {

std::string failure_text(const ExecutionResult& result, int timeout_ms) {
    if (result.error_text && !text::trim(*result.error_text).empty()) return *result.error_text;
    if (result.status == ExecStatus::Timeout)
        return "execution did not finish within " + std::to_string(timeout_ms) + " ms";
    return "the program terminated abnormally";
}

struct PendingRepair {
    InputPayload payload;
    std::string error;
    std::size_t repairs = 0;
};

}  // namespace

CollectResult collect_inputs(const TaskSpec& spec, const Candidate& candidate,
                             const std::vector<Scenario>& scenarios,
                             const CodeProperties& properties, const ForgeConfig& config,
                             const PromptLibrary& prompts, LlmSession& session,
                             Executor& executor) {
    if (config.repair_budget < 1 || config.inputs_per_scenario < 1 || config.early_stop_after < 1)
        throw ConfigError("repair budget, inputs per scenario and early stop must be >= 1");

    CollectResult out;
    std::size_t consecutive_skipped = 0;

    for (const auto& scenario : scenarios) {
        InputBatch batch;
        batch.scenario_index = scenario.index;
        std::vector<std::pair<TestInput, std::optional<CoverageSet>>> validated;
        std::optional<PendingRepair> pending;

        for (std::size_t attempt = 1;
             attempt <= config.repair_budget && validated.size() < config.inputs_per_scenario;
             ++attempt) {
            InputPayload payload;
            std::size_t repairs = 0;
            try {
                if (pending) {
                    ++batch.repair_calls;
                    repairs = pending->repairs + 1;
                    payload = repair_input(pending->payload, pending->error, scenario, properties,
                                           spec, prompts, session, 0);
                } else {
                    ++batch.generate_calls;
                    payload = generate_input(scenario, properties, spec, prompts, session, 0);
                }
            } catch (const InputParseError&) {
                continue;  // the attempt is spent
            }

            auto result = validate_input(payload, spec, candidate, executor, config.timeout_ms);
            if (!is_valid(result)) {
                pending = PendingRepair{std::move(payload), failure_text(result, config.timeout_ms),
                                        repairs};
                continue;
            }
            pending.reset();
            TestInput input;
            input.input_id = "s" + std::to_string(scenario.index) + "-a" + std::to_string(attempt);
            input.scenario_index = scenario.index;
            input.payload = std::move(payload);
            input.repair_count = repairs;
            input.validated = true;
            auto coverage = result.coverage;
            input.execution = std::move(result);
            validated.emplace_back(std::move(input), std::move(coverage));
        }

        batch.generated_total = validated.size();
        batch.reduced = dedup_by_coverage(validated, config.inputs_per_scenario);
        batch.skipped = batch.reduced.empty();
        out.batches.push_back(std::move(batch));

        if (out.batches.back().skipped) {
            if (++consecutive_skipped >= config.early_stop_after) {
                out.early_stopped = true;
                break;
            }
        } else {
            consecutive_skipped = 0;
        }
    }
    return out;
}

}  // namespace trails
