#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace trails {

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct Message {
    Role role = Role::User;
    std::string text;

    bool operator==(const Message&) const = default;
};
using Messages = std::vector<Message>;

/// Pipeline stage an LLM call is attributed to.
enum class Stage { Scenarios, Properties, InputGen, InputRepair, Verify, ZeroShotCot };
std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view text);

struct LlmParams {
    std::string model_name = "default";
    double temperature = 0.5;
    std::optional<std::int64_t> seed;
    int max_output_tokens = 2048;
};

struct TokenUsage {
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;

    std::uint64_t total() const { return prompt_tokens + completion_tokens; }
    TokenUsage& operator+=(const TokenUsage& other) {
        prompt_tokens += other.prompt_tokens;
        completion_tokens += other.completion_tokens;
        return *this;
    }
    friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) { return a += b; }
    bool operator==(const TokenUsage&) const = default;
};

enum class Backend { Live, Mock };

struct LlmResponse {
    std::string text;
    TokenUsage usage;
    Backend backend = Backend::Mock;
    int attempts = 1;
};

TokenUsage usage_total(std::span<const LlmResponse> responses);

// ---------------------------------------------------------------------------
// Prompt templates

/// A prompt as an ordered list of role messages with {name} placeholders.
/// "{{" and "}}" render as literal braces; a brace not forming {identifier}
/// is literal text.
struct PromptTemplate {
    std::string template_id;
    std::vector<std::pair<Role, std::string>> role_messages;

    /// Parses the on-disk template format: "[system]" / "[user]" header lines
    /// open a new message; text before the first header is a user message.
    static PromptTemplate parse(std::string template_id, std::string_view source);

    std::set<std::string> placeholders() const;
};

Messages render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

/// One template per pipeline stage. Files in a template directory override
/// the built-in defaults by name (scenarios.tmpl, properties.tmpl, ...).
struct PromptLibrary {
    PromptTemplate scenarios;
    PromptTemplate properties;
    PromptTemplate input_gen;
    PromptTemplate input_repair;
    PromptTemplate verify_triplet;
    PromptTemplate zero_shot_cot;

    static PromptLibrary defaults();
    static PromptLibrary load(const std::filesystem::path& dir);

    /// Each template may only use its stage's placeholders; the triplet
    /// verification template can never see the candidate code.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Backends

struct CallContext {
    std::string task_id;
    std::string candidate_id;
    Stage stage = Stage::Scenarios;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual LlmResponse complete(const Messages& messages, const LlmParams& params,
                                 const CallContext& context) = 0;
};

struct MockEntry {
    std::string match;                 // substring searched in the concatenated messages
    std::optional<Stage> stage;        // when set, only calls of this stage match
    std::string response;
    std::optional<TokenUsage> usage;   // default: ceil(bytes / 4) on each side
};

std::vector<MockEntry> load_mock_script(const std::filesystem::path& path);

/// Scripted backend. The first unconsumed entry whose matcher accepts the call
/// wins and is consumed. Script consumption is serialized.
class MockBackend final : public LlmBackend {
public:
    explicit MockBackend(std::vector<MockEntry> script,
                         std::chrono::milliseconds latency = std::chrono::milliseconds{0});

    LlmResponse complete(const Messages& messages, const LlmParams& params,
                         const CallContext& context) override;

    std::size_t remaining() const;

private:
    std::vector<MockEntry> script_;
    std::vector<bool> consumed_;
    std::chrono::milliseconds latency_;
    mutable std::mutex mutex_;
};

struct HttpBackendOptions {
    std::string endpoint;                     // e.g. http://localhost:8000 or .../v1/chat/completions
    std::string api_key;
    int attempts = 3;
    std::chrono::milliseconds backoff{1000};  // doubled after every failed attempt
    std::chrono::seconds timeout{300};
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendOptions options);

    LlmResponse complete(const Messages& messages, const LlmParams& params,
                         const CallContext& context) override;

private:
    HttpBackendOptions options_;
    std::string scheme_host_port_;
    std::string path_;
};

std::uint64_t approx_tokens(std::size_t bytes);

// ---------------------------------------------------------------------------
// Gateway

class UsageLedger {
public:
    using Key = std::tuple<std::string, std::string, Stage>;

    void record(const CallContext& context, const TokenUsage& usage);
    TokenUsage total() const;
    TokenUsage for_candidate(std::string_view task_id, std::string_view candidate_id) const;
    std::map<Key, TokenUsage> entries() const;
    std::size_t calls() const;

private:
    mutable std::mutex mutex_;
    std::map<Key, TokenUsage> entries_;
    std::size_t calls_ = 0;
};

struct CallRecord {
    CallContext context;
    Messages messages;
    std::string response;
};

/// Entry point for every LLM call in the pipeline. Safe for concurrent use.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<LlmBackend> backend);

    LlmResponse complete(const Messages& messages, const LlmParams& params,
                         const CallContext& context);

    const UsageLedger& ledger() const { return ledger_; }

    /// Keeps a copy of every call for audits (prompt inspection in tests).
    void set_call_recording(bool enabled);
    std::vector<CallRecord> recorded_calls() const;

private:
    std::shared_ptr<LlmBackend> backend_;
    UsageLedger ledger_;
    bool recording_ = false;
    mutable std::mutex record_mutex_;
    std::vector<CallRecord> records_;
};

/// Per-candidate view of the gateway: fixes params and attribution and keeps
/// the candidate's running token total. Not shared between threads.
class LlmSession {
public:
    LlmSession(Gateway& gateway, LlmParams params, std::string task_id, std::string candidate_id);

    LlmResponse ask(Stage stage, const Messages& messages);

    const TokenUsage& usage() const { return usage_; }
    const LlmParams& params() const { return params_; }
    const std::string& task_id() const { return task_id_; }
    const std::string& candidate_id() const { return candidate_id_; }

private:
    Gateway* gateway_;
    LlmParams params_;
    std::string task_id_;
    std::string candidate_id_;
    TokenUsage usage_;
};

/// Builds the follow-up conversation used when an answer could not be parsed.
Messages with_format_reminder(const Messages& original, const std::string& previous_answer);

}  // namespace trails
