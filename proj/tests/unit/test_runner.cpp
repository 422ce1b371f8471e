#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "scripted_suite.hpp"
#include "trails/error.hpp"
#include "trails/runner.hpp"

using namespace trails;
using namespace trails::testing;

namespace {

std::vector<std::string> dump(const std::vector<TrailsOutcome>& outcomes) {
    std::vector<std::string> out;
    for (const auto& o : outcomes) out.push_back(o.assessment ? to_json(*o.assessment).dump() : "error: " + o.error);
    return out;
}

}  // namespace

TEST(Runner, ParallelMatchesSerialReference) {
    auto suite = make_scripted_suite();
    auto corpus = suite.corpus();
    auto refs = flatten(corpus);
    FakeExecutor ex;
    add_suite_programs(ex);
    const auto prompts = PromptLibrary::defaults();

    Gateway g1(std::make_shared<MockBackend>(suite.script));
    auto serial = dump(assess_corpus_serial(refs, suite.config, prompts, g1, ex, 3));

    auto cfg = suite.config;
    cfg.workers = 4;
    Gateway g2(std::make_shared<MockBackend>(suite.script));
    auto parallel = dump(assess_corpus(refs, cfg, prompts, g2, ex, 3));
    EXPECT_EQ(serial, parallel);
    EXPECT_EQ(g1.ledger().total(), g2.ledger().total());
}

TEST(Runner, OperationalFailuresBecomeErrorEntries) {
    auto suite = make_scripted_suite();
    auto corpus = suite.corpus();
    auto refs = flatten(corpus);
    FakeExecutor ex;
    add_suite_programs(ex);
    // An empty script: every candidate fails on its first LLM call.
    Gateway gw(std::make_shared<MockBackend>(std::vector<MockEntry>{}));
    auto outcomes = assess_corpus(refs, suite.config, PromptLibrary::defaults(), gw, ex);
    auto rec = to_run_record("trails", 0, refs, outcomes);
    ASSERT_EQ(rec.entries.size(), refs.size());
    for (const auto& e : rec.entries) {
        EXPECT_EQ(e.predicted, Label::Incorrect);
        EXPECT_EQ(e.reason, "ERROR");
    }
}

TEST(Runner, BaselineRecords) {
    auto suite = make_scripted_suite();
    auto corpus = suite.corpus();
    auto refs = flatten(corpus);
    auto cfg = suite.config;
    cfg.workers = 3;
    Gateway gw(std::make_shared<MockBackend>(suite.script));
    auto outcomes = baseline_corpus(refs, cfg, PromptLibrary::defaults(), gw, 0);
    auto rec = to_run_record("zero_shot_cot", 1, refs, outcomes);
    ASSERT_EQ(rec.entries.size(), suite.tasks.size());
    for (std::size_t i = 0; i < suite.tasks.size(); ++i) {
        EXPECT_EQ(rec.entries[i].predicted, suite.tasks[i].expected_baseline) << suite.tasks[i].name;
        EXPECT_EQ(rec.entries[i].reason.has_value(), suite.tasks[i].baseline_unparseable);
        EXPECT_EQ(rec.entries[i].ground_truth, *suite.tasks[i].record.candidates[0].ground_truth);
    }
}

TEST(Runner, UnlabeledCandidatesCannotBeRecorded) {
    auto suite = make_scripted_suite();
    auto corpus = suite.corpus();
    corpus[0].candidates[0].ground_truth.reset();
    auto refs = flatten(corpus);
    std::vector<BaselineOutcome> outcomes(refs.size());
    EXPECT_THROW(to_run_record("x", 0, refs, outcomes), ConfigError);
}
