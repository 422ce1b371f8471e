#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "trails/corpus.hpp"
#include "trails/llm_gateway.hpp"

namespace trails {

struct Scenario {
    std::size_t index = 0;
    std::string description;
    std::vector<std::string> preconditions;

    /// Text handed to input-generation prompts.
    std::string render() const;

    bool operator==(const Scenario&) const = default;
};

struct CodeProperties {
    std::string input_structure;
    std::vector<std::string> exception_handling;
    std::vector<std::string> mockable_dependencies;
    std::vector<std::string> temporary_resources;

    std::string render() const;

    bool operator==(const CodeProperties&) const = default;
};

/// Tolerant list parser for scenario answers. Accepts numbered items ("1." /
/// "1)"), bullets ("-", "*", "+", "•") or "Scenario ...:" headed blocks.
/// "Preconditions:" lines inside an item (inline, ';'-separated, or followed
/// by sub-bullets) become preconditions. Returns an empty list when the text
/// holds no list.
std::vector<Scenario> parse_scenarios(std::string_view text);

/// Parses the four-section property answer. input_structure is left empty when
/// the section is missing.
CodeProperties parse_code_properties(std::string_view text);

std::vector<Scenario> extract_scenarios(const TaskSpec& spec, std::size_t max_scenarios,
                                        const PromptLibrary& prompts, LlmSession& session);

CodeProperties extract_code_properties(const TaskSpec& spec, const Candidate& candidate,
                                       const PromptLibrary& prompts, LlmSession& session);

}  // namespace trails
