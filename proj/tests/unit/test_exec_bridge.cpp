#include <gtest/gtest.h>

#include <chrono>

#include "fixtures.hpp"
#include "trails/error.hpp"
#include "trails/exec_bridge.hpp"

using namespace trails;
using namespace trails::testing;
using nlohmann::json;

namespace {

ExecutionRequest stdin_request(const std::string& source, const std::string& input,
                               bool coverage = false, int timeout_ms = 2000) {
    ExecutionRequest r;
    r.source_code = source;
    r.payload = InputPayload::from_stdin(input);
    r.collect_coverage = coverage;
    r.timeout_ms = timeout_ms;
    return r;
}

ExecutionRequest call_request(const std::string& source, json args) {
    ExecutionRequest r;
    r.mode = InputMode::Call;
    r.source_code = source;
    r.entry_point = kMinOpsEntry;
    r.payload = InputPayload::from_args(std::move(args));
    r.timeout_ms = 2000;
    return r;
}

HarnessOptions stub_options() {
    HarnessOptions o;
    o.executable = TRAILS_STUB_HARNESS;
    o.pool_size = 4;
    o.grace = std::chrono::milliseconds(500);
    return o;
}

}  // namespace

TEST(Protocol, RequestRoundTrip) {
    auto r = call_request("src", json::array({1, "two"}));
    r.collect_coverage = true;
    auto j = to_json(r);
    EXPECT_EQ(j["mode"], "CALL");
    EXPECT_EQ(j["entry_point"], kMinOpsEntry);
    auto back = request_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.payload, r.payload);
    EXPECT_EQ(back.entry_point, r.entry_point);
    EXPECT_EQ(back.timeout_ms, r.timeout_ms);
    EXPECT_TRUE(back.collect_coverage);
}

TEST(Protocol, ResultRoundTripAndMalformedReplies) {
    ExecutionResult r;
    r.output = SerializedOutput{OutputKind::StdoutText, "hi"};
    r.coverage = CoverageSet{{1, 4}};
    r.duration_ms = 12;
    r.warnings = {"w"};
    EXPECT_EQ(result_from_json(json::parse(to_json(r).dump())), r);

    EXPECT_THROW(result_from_json(json::parse(R"({"status":"DONE"})")), HarnessProtocolError);
    EXPECT_THROW(result_from_json(json::parse(R"({"duration_ms":1})")), HarnessProtocolError);
    EXPECT_THROW(result_from_json(json::parse(R"({"status":"OK","coverage":[0]})")), HarnessProtocolError);
    EXPECT_THROW(result_from_json(json::parse(R"({"status":"OK","output":{"kind":"BYTES","text":""}})")),
                 HarnessProtocolError);
}

TEST(Protocol, ResultInvariants) {
    auto req = stdin_request("a\nb\n", "x", true);
    ExecutionResult ok;
    ok.output = SerializedOutput{OutputKind::StdoutText, "y"};
    EXPECT_NO_THROW(check_result(req, ok));

    ExecutionResult no_output;
    EXPECT_THROW(check_result(req, no_output), HarnessProtocolError);

    ExecutionResult wrong_kind = ok;
    wrong_kind.output->kind = OutputKind::ReturnValue;
    EXPECT_THROW(check_result(req, wrong_kind), HarnessProtocolError);

    ExecutionResult crash;
    crash.status = ExecStatus::Crash;
    EXPECT_THROW(check_result(req, crash), HarnessProtocolError);
    crash.error_text = "boom";
    EXPECT_NO_THROW(check_result(req, crash));

    ExecutionResult timeout;
    timeout.status = ExecStatus::Timeout;
    timeout.output = ok.output;
    EXPECT_THROW(check_result(req, timeout), HarnessProtocolError);

    ExecutionResult far = ok;
    far.coverage = CoverageSet{{3}};
    EXPECT_THROW(check_result(req, far), HarnessProtocolError);
}

TEST(Protocol, StdoutCanonicalization) {
    EXPECT_EQ(canonical_stdout("a\n\n"), "a");
    EXPECT_EQ(canonical_stdout("a\r\n"), "a");
    EXPECT_EQ(canonical_stdout("  a \n b\n"), "  a \n b");
    EXPECT_EQ(canonical_stdout(""), "");
    EXPECT_EQ(count_lines("a\nb"), 2u);
    EXPECT_EQ(count_lines("a\nb\n"), 2u);
}

// ---------------------------------------------------------------------------
// Contract tests shared by the fake executor and a harness process.

enum class Kind { Fake, Harness };

class ExecutorContract : public ::testing::TestWithParam<Kind> {
protected:
    void SetUp() override {
        if (GetParam() == Kind::Fake) {
            auto fake = std::make_unique<FakeExecutor>();
            add_fixture_programs(*fake);
            executor_ = std::move(fake);
        } else {
            executor_ = std::make_unique<HarnessExecutor>(stub_options());
        }
    }
    std::unique_ptr<Executor> executor_;
};

TEST_P(ExecutorContract, EchoRoundTrips) {
    auto r = executor_->run(stdin_request(kEchoSource, "3\n1 2 3\n"));
    ASSERT_EQ(r.status, ExecStatus::Ok);
    EXPECT_EQ(r.output->kind, OutputKind::StdoutText);
    EXPECT_EQ(r.output->text, "3\n1 2 3");
    EXPECT_FALSE(r.coverage.has_value());  // not requested
}

TEST_P(ExecutorContract, RecursiveCandidateCrashesOnlyWhenXExceedsY) {
    auto crash = executor_->run(call_request(kMinOpsSource, json::array({54, 2})));
    EXPECT_EQ(crash.status, ExecStatus::Crash);
    ASSERT_TRUE(crash.error_text.has_value());
    EXPECT_NE(crash.error_text->find("RecursionError"), std::string::npos);
    EXPECT_FALSE(crash.output.has_value());

    auto ok = executor_->run(call_request(kMinOpsSource, json::array({5, 30})));
    ASSERT_EQ(ok.status, ExecStatus::Ok);
    EXPECT_EQ(ok.output->kind, OutputKind::ReturnValue);
    EXPECT_EQ(ok.output->text, "25");
}

TEST_P(ExecutorContract, InfiniteLoopTimesOut) {
    const auto start = std::chrono::steady_clock::now();
    auto r = executor_->run(stdin_request(kInfiniteLoopSource, "", false, 300));
    const auto elapsed = std::chrono::steady_clock::now() - start;
    EXPECT_EQ(r.status, ExecStatus::Timeout);
    EXPECT_FALSE(r.output.has_value());
    EXPECT_LT(elapsed, std::chrono::milliseconds(300 + 500 + 250));
}

TEST_P(ExecutorContract, CoverageSeparatesBranches) {
    auto even1 = executor_->run(stdin_request(kBranchySource, "4", true));
    auto even2 = executor_->run(stdin_request(kBranchySource, "10", true));
    auto odd = executor_->run(stdin_request(kBranchySource, "7", true));
    ASSERT_TRUE(even1.coverage && even2.coverage && odd.coverage);
    EXPECT_EQ(*even1.coverage, *even2.coverage);
    EXPECT_NE(*even1.coverage, *odd.coverage);
    EXPECT_EQ(odd.output->text, "odd");
}

TEST_P(ExecutorContract, UncaughtExceptionAndInputExhaustionCrash) {
    auto raised = executor_->run(stdin_request(kRaisesSource, "x"));
    EXPECT_EQ(raised.status, ExecStatus::Crash);
    EXPECT_NE(raised.error_text->find("RuntimeError"), std::string::npos);
    auto eof = executor_->run(stdin_request(kReadsTooMuchSource, "only one line"));
    EXPECT_EQ(eof.status, ExecStatus::Crash);
    auto fine = executor_->run(stdin_request(kReadsTooMuchSource, "a\nb"));
    EXPECT_EQ(fine.output->text, "ab");
}

TEST_P(ExecutorContract, UnknownProgramIsACrashNotAnError) {
    auto r = executor_->run(stdin_request("print('never registered')", ""));
    EXPECT_EQ(r.status, ExecStatus::Crash);
}

TEST_P(ExecutorContract, BatchResultsStayAligned) {
    std::vector<ExecutionRequest> reqs;
    for (int i = 0; i < 12; ++i) reqs.push_back(stdin_request(kBranchySource, std::to_string(i), true));
    reqs[5] = stdin_request(kRaisesSource, "x");
    auto serial = run_batch_serial(*executor_, reqs);
    auto parallel = executor_->run_batch(reqs, 4);
    ASSERT_EQ(parallel.size(), reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        ASSERT_TRUE(parallel[i].ok()) << parallel[i].error;
        EXPECT_EQ(parallel[i].result->status, serial[i].result->status);
        EXPECT_EQ(parallel[i].result->output, serial[i].result->output);
        EXPECT_EQ(parallel[i].result->coverage, serial[i].result->coverage);
    }
    EXPECT_EQ(parallel[5].result->status, ExecStatus::Crash);
    EXPECT_EQ(parallel[3].result->output->text, "odd");
    EXPECT_THROW(executor_->run_batch(reqs, 0), ConfigError);
}

INSTANTIATE_TEST_SUITE_P(Both, ExecutorContract, ::testing::Values(Kind::Fake, Kind::Harness),
                         [](const auto& info) { return info.param == Kind::Fake ? "Fake" : "Harness"; });

// ---------------------------------------------------------------------------
// Harness-process specifics

TEST(HarnessExecutor, MissingExecutableIsUnavailable) {
    HarnessOptions o;
    o.executable = "/nonexistent/harness";
    HarnessExecutor ex(o);
    EXPECT_THROW(ex.run(stdin_request(kEchoSource, "x")), HarnessSpawnError);
    EXPECT_THROW(ex.run(stdin_request(kEchoSource, "x")), ExecutorUnavailable);
}

TEST(HarnessExecutor, ProtocolViolationsAreErrorsAndTheProcessIsReplaced) {
    HarnessExecutor ex(stub_options());
    EXPECT_THROW(ex.run(stdin_request("#stub:garbage", "")), HarnessProtocolError);
    EXPECT_THROW(ex.run(stdin_request("#stub:exit", "")), HarnessProtocolError);
    EXPECT_THROW(ex.run(stdin_request("#stub:no-output", "")), HarnessProtocolError);
    auto ok = ex.run(stdin_request(kEchoSource, "still works"));
    EXPECT_EQ(ok.output->text, "still works");
    EXPECT_EQ(ex.spawned(), 4u);
}

TEST(HarnessExecutor, ReusesAfterOkAndRecyclesAfterCrash) {
    HarnessExecutor ex(stub_options());
    auto pid1 = ex.run(stdin_request("#stub:pid", "")).output->text;
    auto pid2 = ex.run(stdin_request("#stub:pid", "")).output->text;
    EXPECT_EQ(pid1, pid2);
    EXPECT_EQ(ex.run(stdin_request(kRaisesSource, "x")).status, ExecStatus::Crash);
    auto pid3 = ex.run(stdin_request("#stub:pid", "")).output->text;
    EXPECT_NE(pid1, pid3);
    EXPECT_EQ(ex.spawned(), 2u);
}

TEST(HarnessExecutor, NoisyStderrDoesNotBlock) {
    HarnessExecutor ex(stub_options());
    auto r = ex.run(stdin_request(std::string("#stub:stderr\n") + "x", "", false, 5000));
    // Unknown program after the noise: a normal CRASH reply still arrives.
    EXPECT_EQ(r.status, ExecStatus::Crash);
}

TEST(HarnessExecutor, PoolBoundsConcurrentProcesses) {
    auto o = stub_options();
    o.pool_size = 2;
    HarnessExecutor ex(o);
    std::vector<ExecutionRequest> reqs(6, stdin_request("#stub:sleep", ""));
    auto out = ex.run_batch(reqs, 6);
    for (const auto& item : out) {
        ASSERT_TRUE(item.ok()) << item.error;
        EXPECT_EQ(item.result->output->text, "slept");
    }
    EXPECT_LE(ex.spawned(), 2u);
}
