#include "trails/scenario_partitioner.hpp"

#include <optional>
#include <regex>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

std::string Scenario::render() const {
    std::string out = description;
    if (!preconditions.empty()) out += "\nPreconditions: " + text::join(preconditions, "; ");
    return out;
}

namespace {

std::string render_list(const std::vector<std::string>& items) {
    if (items.empty()) return "none";
    std::string out;
    for (const auto& item : items) out += "\n- " + item;
    return out;
}

}  // namespace

std::string CodeProperties::render() const {
    return "Input structure: " + input_structure +
           "\nExceptions: " + render_list(exception_handling) +
           "\nMockable dependencies: " + render_list(mockable_dependencies) +
           "\nTemporary resources: " + render_list(temporary_resources);
}

namespace {

enum class ItemStyle { Numbered, Bullet, ScenarioHeader };

struct Marker {
    ItemStyle style;
    std::size_t indent;
    std::string rest;
};

// Removes markdown emphasis wrapped around a whole fragment.
std::string strip_emphasis(std::string_view s) {
    s = text::trim(s);
    while (s.size() >= 2 && (s.front() == '*' || s.front() == '_') && s.back() == s.front()) {
        s.remove_prefix(1);
        s.remove_suffix(1);
        s = text::trim(s);
    }
    while (s.starts_with("**")) s.remove_prefix(2);
    return std::string(text::trim(s));
}

std::optional<Marker> match_marker(std::string_view line) {
    static const std::regex numbered(R"(^\s*(?:#+\s*)?\**\s*\(?(\d+)[.):]\**\s+(.*)$)");
    static const std::regex bullet(R"(^\s*(?:[-*+]|\xE2\x80\xA2)\s+(.*)$)");
    static const std::regex header(R"(^\s*(?:#+\s*)?\**\s*scenario\b[^:]{0,20}:\**\s*(.*)$)",
                                   std::regex::icase);
    const std::string s(line);
    std::smatch m;
    const auto indent = text::indent_of(line);
    if (std::regex_match(s, m, header)) return Marker{ItemStyle::ScenarioHeader, indent, m[1].str()};
    if (std::regex_match(s, m, numbered)) return Marker{ItemStyle::Numbered, indent, m[2].str()};
    if (std::regex_match(s, m, bullet)) return Marker{ItemStyle::Bullet, indent, m[1].str()};
    return std::nullopt;
}

// "Preconditions: a; b" -> {"a", "b"}; nullopt when the line is no such label.
std::optional<std::vector<std::string>> match_preconditions(std::string_view content) {
    static const std::regex label(R"(^\**\s*pre-?\s?conditions?\s*\**\s*:\s*\**\s*(.*)$)",
                                  std::regex::icase);
    const std::string s(text::trim(content));
    std::smatch m;
    if (!std::regex_match(s, m, label)) return std::nullopt;
    std::vector<std::string> out;
    std::string rest = m[1].str();
    std::size_t start = 0;
    while (start <= rest.size()) {
        auto end = rest.find(';', start);
        if (end == std::string::npos) end = rest.size();
        auto piece = strip_emphasis(rest.substr(start, end - start));
        if (!piece.empty() && !text::iequals(piece, "none") && !text::iequals(piece, "none."))
            out.push_back(piece);
        start = end + 1;
    }
    return out;
}

std::string description_piece(std::string_view content) {
    static const std::regex label(R"(^\**\s*description\s*\**\s*:\s*\**\s*(.*)$)", std::regex::icase);
    std::string s(text::trim(content));
    std::smatch m;
    if (std::regex_match(s, m, label)) s = m[1].str();
    return strip_emphasis(s);
}

struct ItemLines {
    std::string first;
    std::vector<std::string_view> rest;
};

Scenario build_scenario(const ItemLines& item) {
    Scenario sc;
    std::vector<std::string> description;
    bool in_preconditions = false;

    auto take = [&](std::string_view content, bool is_sub_item) {
        if (auto pre = match_preconditions(content)) {
            in_preconditions = true;
            sc.preconditions.insert(sc.preconditions.end(), pre->begin(), pre->end());
            return;
        }
        if (in_preconditions && is_sub_item) {
            auto piece = strip_emphasis(content);
            if (!piece.empty()) sc.preconditions.push_back(piece);
            return;
        }
        in_preconditions = false;
        auto piece = description_piece(content);
        if (!piece.empty()) description.push_back(piece);
    };

    take(item.first, false);
    for (auto line : item.rest) {
        if (auto sub = match_marker(line); sub && sub->style != ItemStyle::ScenarioHeader)
            take(sub->rest, true);
        else
            take(line, false);
    }
    sc.description = text::join(description, " ");
    return sc;
}

}  // namespace

std::vector<Scenario> parse_scenarios(std::string_view answer) {
    const auto lines = text::split_lines(answer);

    // The first marker that is not itself a precondition label fixes the style.
    std::optional<Marker> top;
    for (auto line : lines) {
        auto m = match_marker(line);
        if (m && !match_preconditions(m->rest)) {
            top = m;
            break;
        }
    }
    if (!top) return {};

    auto is_item_start = [&](std::string_view line) -> std::optional<Marker> {
        auto m = match_marker(line);
        if (!m || m->style != top->style || m->indent > top->indent) return std::nullopt;
        if (match_preconditions(m->rest)) return std::nullopt;
        return m;
    };

    std::vector<ItemLines> items;
    bool open = false;
    bool saw_blank = false;
    for (auto line : lines) {
        if (auto m = is_item_start(line)) {
            items.push_back(ItemLines{m->rest, {}});
            open = true;
            saw_blank = false;
            continue;
        }
        if (!open) continue;
        if (text::trim(line).empty()) {
            saw_blank = true;
            continue;
        }
        // After a blank line, flush-left prose closes the list item.
        if (saw_blank && text::indent_of(line) <= top->indent && !match_marker(line)) {
            open = false;
            continue;
        }
        items.back().rest.push_back(line);
    }

    std::vector<Scenario> scenarios;
    for (const auto& item : items) {
        auto sc = build_scenario(item);
        if (sc.description.empty()) continue;
        sc.index = scenarios.size();
        scenarios.push_back(std::move(sc));
    }
    return scenarios;
}

namespace {

enum class Section { None, Input, Exceptions, Mockable, Temporary };

std::optional<std::pair<Section, std::string>> match_section_header(std::string_view line) {
    static const std::regex header(
        R"(^\s*(?:#+\s*)?\**\s*(inputs? structure|input format|exceptions?(?: handling)?|)"
        R"(mockable (?:dependencies|dependency|objects?)|mocks?|temporary resources?)\s*\**\s*(:)?\s*\**\s*(.*)$)",
        std::regex::icase);
    const std::string s(line);
    std::smatch m;
    if (!std::regex_match(s, m, header)) return std::nullopt;
    const std::string rest = m[3].str();
    // Without a colon only a bare header line counts.
    if (!m[2].matched && !text::trim(rest).empty()) return std::nullopt;
    const auto key = text::to_lower(m[1].str());
    Section section = Section::Input;
    if (key.starts_with("exception")) section = Section::Exceptions;
    else if (key.starts_with("mock")) section = Section::Mockable;
    else if (key.starts_with("temporary")) section = Section::Temporary;
    return std::pair{section, std::string(text::trim(rest))};
}

bool is_none(std::string_view s) {
    auto t = text::to_lower(text::trim(s));
    while (!t.empty() && (t.back() == '.' || t.back() == '*')) t.pop_back();
    return t.empty() || t == "none" || t == "n/a" || t == "na" || t == "no" || t == "nothing";
}

std::string strip_bullet(std::string_view line) {
    if (auto m = match_marker(line); m && m->style != ItemStyle::ScenarioHeader)
        return strip_emphasis(m->rest);
    return strip_emphasis(line);
}

}  // namespace

CodeProperties parse_code_properties(std::string_view answer) {
    CodeProperties props;
    std::vector<std::string> input_lines;
    Section current = Section::None;
    bool saw_header = false;

    auto add = [&](std::string_view raw) {
        if (current == Section::None) return;
        auto item = strip_bullet(raw);
        if (is_none(item)) return;
        switch (current) {
            case Section::Input: input_lines.push_back(item); break;
            case Section::Exceptions: props.exception_handling.push_back(item); break;
            case Section::Mockable: props.mockable_dependencies.push_back(item); break;
            case Section::Temporary: props.temporary_resources.push_back(item); break;
            case Section::None: break;
        }
    };

    for (auto line : text::split_lines(answer)) {
        const bool bulleted = line.find_first_not_of(" \t") != std::string_view::npos &&
                              match_marker(line).has_value();
        if (!bulleted) {
            if (auto header = match_section_header(line)) {
                current = header->first;
                saw_header = true;
                if (!header->second.empty()) add(header->second);
                continue;
            }
        }
        if (text::trim(line).empty() || text::trim(line).starts_with("```")) continue;
        add(line);
    }
    props.input_structure = text::join(input_lines, "\n");
    // An answer without any section header is read as a plain input description.
    if (!saw_header) props.input_structure = std::string(text::trim(answer));
    return props;
}

std::vector<Scenario> extract_scenarios(const TaskSpec& spec, std::size_t max_scenarios,
                                        const PromptLibrary& prompts, LlmSession& session) {
    if (max_scenarios < 1) throw ConfigError("scenario count must be >= 1");
    const auto messages = render(prompts.scenarios, {{"spec", spec.specification},
                                                     {"count", std::to_string(max_scenarios)}});
    auto first = session.ask(Stage::Scenarios, messages);
    auto scenarios = parse_scenarios(first.text);
    if (scenarios.empty()) {
        auto second = session.ask(Stage::Scenarios, with_format_reminder(messages, first.text));
        scenarios = parse_scenarios(second.text);
    }
    if (scenarios.empty())
        throw ScenarioParseError("no scenario could be parsed for task " + spec.task_id);
    if (scenarios.size() > max_scenarios) scenarios.resize(max_scenarios);
    return scenarios;
}

CodeProperties extract_code_properties(const TaskSpec& spec, const Candidate& candidate,
                                       const PromptLibrary& prompts, LlmSession& session) {
    const auto messages =
        render(prompts.properties, {{"spec", spec.specification}, {"code", candidate.source_code}});
    auto first = session.ask(Stage::Properties, messages);
    auto props = parse_code_properties(first.text);
    if (props.input_structure.empty()) {
        auto second = session.ask(Stage::Properties, with_format_reminder(messages, first.text));
        props = parse_code_properties(second.text);
    }
    if (props.input_structure.empty())
        throw PropertiesParseError("no input structure found for " + spec.task_id + "/" +
                                   candidate.candidate_id);
    return props;
}

}  // namespace trails
