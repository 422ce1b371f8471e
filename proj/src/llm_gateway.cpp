#include "trails/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Scenarios: return "scenarios";
        case Stage::Properties: return "properties";
        case Stage::InputGen: return "input_gen";
        case Stage::InputRepair: return "input_repair";
        case Stage::Verify: return "verify";
        case Stage::ZeroShotCot: return "zero_shot_cot";
    }
    return "scenarios";
}

std::optional<Stage> parse_stage(std::string_view text) {
    for (Stage s : {Stage::Scenarios, Stage::Properties, Stage::InputGen, Stage::InputRepair,
                    Stage::Verify, Stage::ZeroShotCot})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

TokenUsage usage_total(std::span<const LlmResponse> responses) {
    TokenUsage sum;
    for (const auto& r : responses) sum += r.usage;
    return sum;
}

std::uint64_t approx_tokens(std::size_t bytes) { return (bytes + 3) / 4; }

// ---------------------------------------------------------------------------
// Templates

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text for literal runs and on_placeholder for each {name}.
template <typename OnText, typename OnPlaceholder>
void scan_template(std::string_view body, OnText&& on_text, OnPlaceholder&& on_placeholder) {
    std::size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
            on_text(std::string_view("{"));
            i += 2;
            continue;
        }
        if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
            on_text(std::string_view("}"));
            i += 2;
            continue;
        }
        if (c == '{' && i + 1 < body.size() && is_ident_start(body[i + 1])) {
            std::size_t j = i + 1;
            while (j < body.size() && is_ident_char(body[j])) ++j;
            if (j < body.size() && body[j] == '}') {
                on_placeholder(body.substr(i + 1, j - i - 1));
                i = j + 1;
                continue;
            }
        }
        on_text(body.substr(i, 1));
        ++i;
    }
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string template_id, std::string_view source) {
    PromptTemplate tmpl;
    tmpl.template_id = std::move(template_id);

    std::optional<Role> current;
    std::string buffer;
    auto flush = [&] {
        auto body = std::string(text::trim(buffer));
        if (current || !body.empty()) tmpl.role_messages.emplace_back(current.value_or(Role::User), body);
        buffer.clear();
    };
    for (auto line : text::split_lines(source)) {
        auto t = text::trim(line);
        if (t == "[system]" || t == "[user]") {
            if (current || !text::trim(buffer).empty()) flush();
            current = t == "[system]" ? Role::System : Role::User;
            continue;
        }
        buffer.append(line);
        buffer.push_back('\n');
    }
    flush();
    if (tmpl.role_messages.empty())
        throw TemplateError("template " + tmpl.template_id + " has no messages");
    return tmpl;
}

std::set<std::string> PromptTemplate::placeholders() const {
    std::set<std::string> names;
    for (const auto& [role, body] : role_messages)
        scan_template(body, [](std::string_view) {},
                      [&](std::string_view name) { names.emplace(name); });
    return names;
}

Messages render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
    Messages out;
    out.reserve(tmpl.role_messages.size());
    for (const auto& [role, body] : tmpl.role_messages) {
        std::string rendered;
        scan_template(body, [&](std::string_view t) { rendered.append(t); },
                      [&](std::string_view name) {
                          auto it = bindings.find(std::string(name));
                          if (it == bindings.end()) throw MissingPlaceholder(std::string(name));
                          rendered.append(it->second);
                      });
        out.push_back(Message{role, std::move(rendered)});
    }
    return out;
}

namespace {

#include "default_templates.inc"

struct StageTemplateRule {
    const char* file;
    PromptTemplate PromptLibrary::*member;
    std::set<std::string> allowed;
    std::set<std::string> required;
};

const std::vector<StageTemplateRule>& template_rules() {
    static const std::vector<StageTemplateRule> rules{
        {"scenarios", &PromptLibrary::scenarios, {"spec", "count"}, {"spec"}},
        {"properties", &PromptLibrary::properties, {"spec", "code"}, {"spec", "code"}},
        {"input_gen", &PromptLibrary::input_gen, {"spec", "scenario", "properties", "input_format"},
         {"spec", "scenario"}},
        {"input_repair", &PromptLibrary::input_repair,
         {"spec", "scenario", "properties", "input", "error", "input_format"},
         {"spec", "input", "error"}},
        {"verify_triplet", &PromptLibrary::verify_triplet, {"spec", "input", "output"},
         {"spec", "input", "output"}},
        {"zero_shot_cot", &PromptLibrary::zero_shot_cot, {"spec", "code"}, {"spec", "code"}},
    };
    return rules;
}

std::string_view default_template_source(std::string_view name) {
    for (const auto& [file, body] : kDefaultTemplates)
        if (name == file) return body;
    throw TemplateError("no built-in template named " + std::string(name));
}

}  // namespace

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary lib;
    for (const auto& rule : template_rules())
        lib.*rule.member = PromptTemplate::parse(rule.file, default_template_source(rule.file));
    lib.validate();
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw IoError("template directory not found: " + dir.string());
    PromptLibrary lib = defaults();
    for (const auto& rule : template_rules()) {
        auto path = dir / (std::string(rule.file) + ".tmpl");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        if (!in) throw IoError("cannot read template " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        lib.*rule.member = PromptTemplate::parse(rule.file, ss.str());
    }
    lib.validate();
    return lib;
}

void PromptLibrary::validate() const {
    for (const auto& rule : template_rules()) {
        const PromptTemplate& tmpl = this->*rule.member;
        auto used = tmpl.placeholders();
        for (const auto& name : used)
            if (!rule.allowed.contains(name))
                throw TemplateError("template " + std::string(rule.file) +
                                    " uses unsupported placeholder {" + name + "}");
        for (const auto& name : rule.required)
            if (!used.contains(name))
                throw TemplateError("template " + std::string(rule.file) +
                                    " must reference {" + name + "}");
    }
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

std::string concatenate(const Messages& messages) {
    std::string all;
    for (const auto& m : messages) {
        all.append(m.text);
        all.push_back('\n');
    }
    return all;
}

}  // namespace

std::vector<MockEntry> load_mock_script(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read mock script " + path.string());
    std::vector<MockEntry> script;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto obj = json::parse(line);
            MockEntry entry;
            entry.match = obj.value("match", std::string{});
            entry.response = obj.at("response").get<std::string>();
            if (obj.contains("stage")) {
                entry.stage = parse_stage(obj["stage"].get<std::string>());
                if (!entry.stage) throw FormatError(line_no, "unknown stage " + obj["stage"].dump());
            }
            if (obj.contains("prompt_tokens") || obj.contains("completion_tokens"))
                entry.usage = TokenUsage{obj.value("prompt_tokens", std::uint64_t{0}),
                                         obj.value("completion_tokens", std::uint64_t{0})};
            script.push_back(std::move(entry));
        } catch (const json::exception& e) {
            throw FormatError(line_no, std::string("bad mock entry: ") + e.what());
        }
    }
    return script;
}

MockBackend::MockBackend(std::vector<MockEntry> script, std::chrono::milliseconds latency)
    : script_(std::move(script)), consumed_(script_.size(), false), latency_(latency) {}

LlmResponse MockBackend::complete(const Messages& messages, const LlmParams&,
                                  const CallContext& context) {
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    const std::string haystack = concatenate(messages);

    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < script_.size(); ++i) {
        if (consumed_[i]) continue;
        const MockEntry& entry = script_[i];
        if (entry.stage && *entry.stage != context.stage) continue;
        if (haystack.find(entry.match) == std::string::npos) continue;
        consumed_[i] = true;
        LlmResponse response;
        response.text = entry.response;
        response.backend = Backend::Mock;
        response.usage = entry.usage.value_or(
            TokenUsage{approx_tokens(haystack.size()), approx_tokens(entry.response.size())});
        return response;
    }
    throw MockExhausted("no scripted response for " + std::string(to_string(context.stage)) +
                        " call of " + context.task_id + "/" + context.candidate_id);
}

std::size_t MockBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count(consumed_.begin(), consumed_.end(), false));
}

// ---------------------------------------------------------------------------
// Gateway

void UsageLedger::record(const CallContext& context, const TokenUsage& usage) {
    std::lock_guard lock(mutex_);
    entries_[Key{context.task_id, context.candidate_id, context.stage}] += usage;
    ++calls_;
}

TokenUsage UsageLedger::total() const {
    std::lock_guard lock(mutex_);
    TokenUsage sum;
    for (const auto& [key, usage] : entries_) sum += usage;
    return sum;
}

TokenUsage UsageLedger::for_candidate(std::string_view task_id,
                                      std::string_view candidate_id) const {
    std::lock_guard lock(mutex_);
    TokenUsage sum;
    for (const auto& [key, usage] : entries_)
        if (std::get<0>(key) == task_id && std::get<1>(key) == candidate_id) sum += usage;
    return sum;
}

std::map<UsageLedger::Key, TokenUsage> UsageLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t UsageLedger::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

Gateway::Gateway(std::shared_ptr<LlmBackend> backend) : backend_(std::move(backend)) {
    if (!backend_) throw ConfigError("gateway requires a backend");
}

LlmResponse Gateway::complete(const Messages& messages, const LlmParams& params,
                              const CallContext& context) {
    auto response = backend_->complete(messages, params, context);
    ledger_.record(context, response.usage);
    std::lock_guard lock(record_mutex_);
    if (recording_) records_.push_back(CallRecord{context, messages, response.text});
    return response;
}

void Gateway::set_call_recording(bool enabled) {
    std::lock_guard lock(record_mutex_);
    recording_ = enabled;
}

std::vector<CallRecord> Gateway::recorded_calls() const {
    std::lock_guard lock(record_mutex_);
    return records_;
}

LlmSession::LlmSession(Gateway& gateway, LlmParams params, std::string task_id,
                       std::string candidate_id)
    : gateway_(&gateway),
      params_(std::move(params)),
      task_id_(std::move(task_id)),
      candidate_id_(std::move(candidate_id)) {}

LlmResponse LlmSession::ask(Stage stage, const Messages& messages) {
    auto response = gateway_->complete(messages, params_, CallContext{task_id_, candidate_id_, stage});
    usage_ += response.usage;
    return response;
}

Messages with_format_reminder(const Messages& original, const std::string& previous_answer) {
    Messages follow_up = original;
    follow_up.push_back(Message{Role::Assistant, previous_answer});
    follow_up.push_back(Message{
        Role::User,
        "Your previous answer could not be parsed. Answer again and follow the requested "
        "output format exactly."});
    return follow_up;
}

}  // namespace trails
