#include <algorithm>

#include "trails/error.hpp"
#include "trails/exec_bridge.hpp"

namespace trails {

using nlohmann::json;

InputPayload InputPayload::from_stdin(std::string text) {
    InputPayload p;
    p.mode = InputMode::Stdin;
    p.stdin_text = std::move(text);
    return p;
}

InputPayload InputPayload::from_args(json args) {
    InputPayload p;
    p.mode = InputMode::Call;
    p.call_args = std::move(args);
    return p;
}

std::string InputPayload::render() const {
    if (mode == InputMode::Stdin) return stdin_text.value_or("");
    return call_args ? call_args->dump() : "[]";
}

std::string_view to_string(ExecStatus status) {
    switch (status) {
        case ExecStatus::Ok: return "OK";
        case ExecStatus::Crash: return "CRASH";
        case ExecStatus::Timeout: return "TIMEOUT";
    }
    return "CRASH";
}

std::string_view to_string(OutputKind kind) {
    return kind == OutputKind::StdoutText ? "STDOUT_TEXT" : "RETURN_VALUE";
}

std::string canonical_stdout(std::string_view raw) {
    while (!raw.empty() && (raw.back() == '\n' || raw.back() == '\r')) raw.remove_suffix(1);
    return std::string(raw);
}

std::size_t count_lines(std::string_view source) {
    if (source.empty()) return 0;
    auto n = static_cast<std::size_t>(std::count(source.begin(), source.end(), '\n'));
    return source.back() == '\n' ? n : n + 1;
}

json to_json(const InputPayload& payload) {
    json j{{"mode", to_string(payload.mode)}};
    if (payload.stdin_text) j["stdin_text"] = *payload.stdin_text;
    if (payload.call_args) j["call_args"] = *payload.call_args;
    return j;
}

json to_json(const ExecutionRequest& request) {
    json j{{"mode", to_string(request.mode)},
           {"source_code", request.source_code},
           {"payload", to_json(request.payload)},
           {"timeout_ms", request.timeout_ms},
           {"collect_coverage", request.collect_coverage}};
    if (request.entry_point) j["entry_point"] = *request.entry_point;
    return j;
}

json to_json(const ExecutionResult& result) {
    json j{{"status", to_string(result.status)}, {"duration_ms", result.duration_ms}};
    if (result.output)
        j["output"] = {{"kind", to_string(result.output->kind)}, {"text", result.output->text}};
    if (result.error_text) j["error_text"] = *result.error_text;
    if (result.coverage) j["coverage"] = result.coverage->lines;
    if (result.stderr_text) j["stderr_text"] = *result.stderr_text;
    if (!result.warnings.empty()) j["warnings"] = result.warnings;
    return j;
}

namespace {

InputMode mode_field(const json& j) {
    auto mode = parse_input_mode(j.at("mode").get<std::string>());
    if (!mode) throw HarnessProtocolError("unknown mode " + j.at("mode").dump());
    return *mode;
}

}  // namespace

InputPayload payload_from_json(const json& j) {
    InputPayload p;
    p.mode = mode_field(j);
    if (j.contains("stdin_text")) p.stdin_text = j["stdin_text"].get<std::string>();
    if (j.contains("call_args")) p.call_args = j["call_args"];
    const bool stdin_ok = p.mode == InputMode::Stdin && p.stdin_text && !p.call_args;
    const bool call_ok = p.mode == InputMode::Call && p.call_args && p.call_args->is_array() &&
                         !p.stdin_text;
    if (!stdin_ok && !call_ok) throw HarnessProtocolError("payload does not match its mode");
    return p;
}

ExecutionRequest request_from_json(const json& j) {
    try {
        ExecutionRequest r;
        r.mode = mode_field(j);
        r.source_code = j.at("source_code").get<std::string>();
        if (j.contains("entry_point") && !j["entry_point"].is_null())
            r.entry_point = j["entry_point"].get<std::string>();
        r.payload = payload_from_json(j.at("payload"));
        r.timeout_ms = j.at("timeout_ms").get<int>();
        r.collect_coverage = j.value("collect_coverage", false);
        return r;
    } catch (const json::exception& e) {
        throw HarnessProtocolError(std::string("malformed request: ") + e.what());
    }
}

ExecutionResult result_from_json(const json& j) {
    try {
        ExecutionResult r;
        const auto status = j.at("status").get<std::string>();
        if (status == "OK") r.status = ExecStatus::Ok;
        else if (status == "CRASH") r.status = ExecStatus::Crash;
        else if (status == "TIMEOUT") r.status = ExecStatus::Timeout;
        else throw HarnessProtocolError("unknown status " + status);
        if (j.contains("output") && !j["output"].is_null()) {
            const auto& o = j["output"];
            const auto kind = o.at("kind").get<std::string>();
            if (kind != "STDOUT_TEXT" && kind != "RETURN_VALUE")
                throw HarnessProtocolError("unknown output kind " + kind);
            r.output = SerializedOutput{
                kind == "STDOUT_TEXT" ? OutputKind::StdoutText : OutputKind::ReturnValue,
                o.at("text").get<std::string>()};
        }
        if (j.contains("error_text") && !j["error_text"].is_null())
            r.error_text = j["error_text"].get<std::string>();
        if (j.contains("coverage") && !j["coverage"].is_null()) {
            CoverageSet cov;
            for (const auto& line : j["coverage"]) {
                auto n = line.get<std::int64_t>();
                if (n < 1) throw HarnessProtocolError("coverage line numbers are 1-based");
                cov.lines.insert(static_cast<std::uint32_t>(n));
            }
            r.coverage = std::move(cov);
        }
        if (j.contains("stderr_text") && !j["stderr_text"].is_null())
            r.stderr_text = j["stderr_text"].get<std::string>();
        if (j.contains("warnings"))
            r.warnings = j["warnings"].get<std::vector<std::string>>();
        r.duration_ms = j.value("duration_ms", std::int64_t{0});
        return r;
    } catch (const json::exception& e) {
        throw HarnessProtocolError(std::string("malformed reply: ") + e.what());
    }
}

void check_result(const ExecutionRequest& request, const ExecutionResult& result) {
    switch (result.status) {
        case ExecStatus::Ok: {
            if (!result.output) throw HarnessProtocolError("OK reply without output");
            const auto expected =
                request.mode == InputMode::Stdin ? OutputKind::StdoutText : OutputKind::ReturnValue;
            if (result.output->kind != expected)
                throw HarnessProtocolError("output kind does not match request mode");
            break;
        }
        case ExecStatus::Crash:
            if (!result.error_text) throw HarnessProtocolError("CRASH reply without error_text");
            break;
        case ExecStatus::Timeout:
            if (result.output) throw HarnessProtocolError("TIMEOUT reply carries output");
            break;
    }
    if (result.coverage && !result.coverage->lines.empty()) {
        const auto max_line = count_lines(request.source_code);
        if (*result.coverage->lines.rbegin() > max_line)
            throw HarnessProtocolError("coverage line beyond end of source");
    }
}

std::vector<BatchItem> run_batch_serial(Executor& executor,
                                        std::span<const ExecutionRequest> requests) {
    std::vector<BatchItem> out(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        try {
            out[i].result = executor.run(requests[i]);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

std::vector<BatchItem> Executor::run_batch(std::span<const ExecutionRequest> requests,
                                           int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (parallelism == 1 || requests.size() < 2) return run_batch_serial(*this, requests);

    std::vector<BatchItem> out(requests.size());
    const auto n = static_cast<std::ptrdiff_t>(requests.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallelism)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i].result = run(requests[i]);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fake executor

void FakeExecutor::add_program(std::string source_code, FakeProgram program) {
    std::lock_guard lock(mutex_);
    programs_[std::move(source_code)] = std::move(program);
}

std::size_t FakeExecutor::runs() const {
    std::lock_guard lock(mutex_);
    return runs_;
}

ExecutionResult FakeExecutor::run(const ExecutionRequest& request) {
    FakeProgram program;
    {
        std::lock_guard lock(mutex_);
        ++runs_;
        auto it = programs_.find(request.source_code);
        if (it != programs_.end()) program = it->second;
    }

    ExecutionResult result;
    if (!program) {
        result.status = ExecStatus::Crash;
        result.error_text = "FakeExecutor: no program registered for this source";
        return result;
    }

    FakeRun run = program(request);
    result.duration_ms = std::min<std::int64_t>(run.simulated_ms, request.timeout_ms);
    if (run.status == ExecStatus::Timeout || run.simulated_ms > request.timeout_ms) {
        result.status = ExecStatus::Timeout;
        result.error_text = "execution exceeded " + std::to_string(request.timeout_ms) + " ms";
        return result;
    }
    result.status = run.status;
    if (run.status == ExecStatus::Crash) {
        result.error_text = run.error_text.empty() ? "crash" : run.error_text;
        return result;
    }
    result.output = SerializedOutput{
        request.mode == InputMode::Stdin ? OutputKind::StdoutText : OutputKind::ReturnValue,
        request.mode == InputMode::Stdin ? canonical_stdout(run.output) : run.output};
    if (request.collect_coverage) result.coverage = CoverageSet{run.lines};
    check_result(request, result);
    return result;
}

}  // namespace trails
