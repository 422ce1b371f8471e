#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trails/corpus.hpp"

namespace trails {

/// A concrete test input: a stdin document or positional call arguments.
struct InputPayload {
    InputMode mode = InputMode::Stdin;
    std::optional<std::string> stdin_text;
    std::optional<nlohmann::json> call_args;  // always a JSON array

    static InputPayload from_stdin(std::string text);
    static InputPayload from_args(nlohmann::json args);

    /// Text shown to the LLM: the stdin document, or the argument list as JSON.
    std::string render() const;

    bool operator==(const InputPayload&) const = default;
};

enum class ExecStatus { Ok, Crash, Timeout };
enum class OutputKind { StdoutText, ReturnValue };

std::string_view to_string(ExecStatus status);
std::string_view to_string(OutputKind kind);

struct SerializedOutput {
    OutputKind kind = OutputKind::StdoutText;
    std::string text;

    bool operator==(const SerializedOutput&) const = default;
};

struct CoverageSet {
    std::set<std::uint32_t> lines;  // 1-based

    bool operator==(const CoverageSet&) const = default;
    auto operator<=>(const CoverageSet&) const = default;
};

struct ExecutionRequest {
    InputMode mode = InputMode::Stdin;
    std::string source_code;
    std::optional<std::string> entry_point;
    InputPayload payload;
    int timeout_ms = 10000;
    bool collect_coverage = false;
};

struct ExecutionResult {
    ExecStatus status = ExecStatus::Ok;
    std::optional<SerializedOutput> output;
    std::optional<std::string> error_text;
    std::optional<CoverageSet> coverage;
    std::int64_t duration_ms = 0;
    std::optional<std::string> stderr_text;
    std::vector<std::string> warnings;

    bool operator==(const ExecutionResult&) const = default;
};

/// Strips trailing newlines; everything else in program output is kept as is.
std::string canonical_stdout(std::string_view raw);

std::size_t count_lines(std::string_view source);

// Bridge <-> harness wire format: one JSON object per line in each direction.
nlohmann::json to_json(const InputPayload& payload);
nlohmann::json to_json(const ExecutionRequest& request);
nlohmann::json to_json(const ExecutionResult& result);
InputPayload payload_from_json(const nlohmann::json& j);
ExecutionRequest request_from_json(const nlohmann::json& j);
ExecutionResult result_from_json(const nlohmann::json& j);

/// Throws HarnessProtocolError when a reply breaks the result invariants for
/// the request it answers.
void check_result(const ExecutionRequest& request, const ExecutionResult& result);

struct BatchItem {
    std::optional<ExecutionResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

class Executor {
public:
    virtual ~Executor() = default;
    virtual ExecutionResult run(const ExecutionRequest& request) = 0;

    /// Runs requests on up to `parallelism` threads; results stay positionally
    /// aligned and a failing request only affects its own slot.
    std::vector<BatchItem> run_batch(std::span<const ExecutionRequest> requests, int parallelism);
};

/// Serial reference for run_batch.
std::vector<BatchItem> run_batch_serial(Executor& executor,
                                        std::span<const ExecutionRequest> requests);

struct HarnessOptions {
    std::filesystem::path executable;
    std::vector<std::string> args;
    std::size_t pool_size = 4;
    std::chrono::milliseconds grace{500};
    bool forward_stderr = false;
};

/// Client for an external harness process speaking the line protocol.
/// Processes are pooled; a process is reused after OK replies and replaced
/// after CRASH, TIMEOUT or any protocol failure.
class HarnessExecutor final : public Executor {
public:
    explicit HarnessExecutor(HarnessOptions options);
    ~HarnessExecutor() override;

    HarnessExecutor(const HarnessExecutor&) = delete;
    HarnessExecutor& operator=(const HarnessExecutor&) = delete;

    ExecutionResult run(const ExecutionRequest& request) override;

    std::size_t spawned() const;

private:
    struct Process;

    std::unique_ptr<Process> acquire();
    void release(std::unique_ptr<Process> process, bool reusable);

    HarnessOptions options_;
    mutable std::mutex mutex_;
    std::condition_variable available_;
    std::vector<std::unique_ptr<Process>> idle_;
    std::size_t live_ = 0;
    std::size_t spawned_ = 0;
};

/// Outcome a fake program reports for one request.
struct FakeRun {
    ExecStatus status = ExecStatus::Ok;
    std::string output;
    std::string error_text;
    std::set<std::uint32_t> lines;
    std::int64_t simulated_ms = 0;
};

using FakeProgram = std::function<FakeRun(const ExecutionRequest&)>;

/// In-memory executor: programs are registered against their exact source
/// text. Reentrant once populated.
class FakeExecutor final : public Executor {
public:
    void add_program(std::string source_code, FakeProgram program);

    ExecutionResult run(const ExecutionRequest& request) override;

    std::size_t runs() const;

private:
    std::map<std::string, FakeProgram> programs_;
    mutable std::mutex mutex_;
    std::size_t runs_ = 0;
};

}  // namespace trails
