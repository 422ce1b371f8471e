// Serial references against their OpenMP counterparts.
//
//   assess:  the scripted suite with a mock backend that sleeps per call, so the
//            parallel runner's gain comes from overlapping LLM latency.
//   metrics: per-run MCC/P4 over many synthetic runs.
#include <benchmark/benchmark.h>

#include <random>

#include "scripted_suite.hpp"
#include "trails/runner.hpp"

using namespace trails;
using namespace trails::testing;

namespace {

constexpr std::chrono::milliseconds kLatency{2};

void BM_AssessSerial(benchmark::State& state) {
    const auto suite = make_scripted_suite();
    const auto corpus = suite.corpus();
    const auto refs = flatten(corpus);
    FakeExecutor executor;
    add_suite_programs(executor);
    const auto prompts = PromptLibrary::defaults();
    for (auto _ : state) {
        Gateway gateway(std::make_shared<MockBackend>(suite.script, kLatency));
        benchmark::DoNotOptimize(assess_corpus_serial(refs, suite.config, prompts, gateway, executor, 0));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(refs.size()));
}

void BM_AssessParallel(benchmark::State& state) {
    const auto suite = make_scripted_suite();
    const auto corpus = suite.corpus();
    const auto refs = flatten(corpus);
    FakeExecutor executor;
    add_suite_programs(executor);
    const auto prompts = PromptLibrary::defaults();
    auto cfg = suite.config;
    cfg.workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        Gateway gateway(std::make_shared<MockBackend>(suite.script, kLatency));
        benchmark::DoNotOptimize(assess_corpus(refs, cfg, prompts, gateway, executor, 0));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(refs.size()));
}

std::vector<RunRecord> synthetic_runs(std::size_t count, std::size_t entries) {
    std::mt19937 rng(11);
    std::vector<RunRecord> runs;
    for (std::size_t k = 0; k < count; ++k) {
        RunRecord r{"bench", k, {}};
        for (std::size_t i = 0; i < entries; ++i) {
            RunEntry e;
            e.task_id = "t" + std::to_string(i);
            e.candidate_id = "c" + std::to_string(i);
            e.predicted = rng() % 2 ? Label::Correct : Label::Incorrect;
            e.ground_truth = rng() % 2 ? Label::Correct : Label::Incorrect;
            r.entries.push_back(std::move(e));
        }
        runs.push_back(std::move(r));
    }
    return runs;
}

void BM_MetricsSerial(benchmark::State& state) {
    const auto runs = synthetic_runs(static_cast<std::size_t>(state.range(0)), 2000);
    for (auto _ : state) benchmark::DoNotOptimize(metrics_for_runs_serial(runs));
}

void BM_MetricsParallel(benchmark::State& state) {
    const auto runs = synthetic_runs(static_cast<std::size_t>(state.range(0)), 2000);
    for (auto _ : state) benchmark::DoNotOptimize(metrics_for_runs(runs, 4));
}

}  // namespace

BENCHMARK(BM_AssessSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AssessParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MetricsSerial)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MetricsParallel)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
