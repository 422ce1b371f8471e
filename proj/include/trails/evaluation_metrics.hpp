#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trails/corpus.hpp"
#include "trails/llm_gateway.hpp"

namespace trails {

struct RunEntry {
    std::string task_id;
    std::string candidate_id;
    Label predicted = Label::Incorrect;
    Label ground_truth = Label::Incorrect;
    TokenUsage tokens;
    std::optional<double> score;    // agreement score, when the approach has one
    std::optional<std::string> reason;

    bool operator==(const RunEntry&) const = default;
};

struct RunRecord {
    std::string approach;
    std::size_t run_index = 0;
    std::vector<RunEntry> entries;

    bool operator==(const RunRecord&) const = default;
};

/// One JSON object per line: approach, run_index, task_id, candidate_id,
/// predicted, ground_truth, prompt_tokens, completion_tokens and optionally
/// score and reason. All lines of a file share approach and run_index.
RunRecord read_run_record(const std::filesystem::path& path);
RunRecord parse_run_record(std::istream& in);
void write_run_record(std::ostream& out, const RunRecord& run);

/// Positive class: CORRECT.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    void add(Label predicted, Label truth);

    bool operator==(const ConfusionMatrix&) const = default;
};

/// A metric value; `degenerate` marks a value substituted for an undefined one.
struct Metric {
    double value = 0.0;
    bool degenerate = false;
};

ConfusionMatrix confusion(const RunRecord& run);

/// Matthews correlation coefficient. 0 (degenerate) when a marginal is empty.
Metric mcc(const ConfusionMatrix& m);

/// P4 = 4·tp·tn / (4·tp·tn + (tp + tn)·(fp + fn)). 0 (degenerate) when the
/// denominator vanishes.
Metric p4(const ConfusionMatrix& m);

/// Mean of per-run metric values.
struct RerunMetrics {
    double mcc = 0.0;
    double p4 = 0.0;
    std::size_t runs = 0;
    std::size_t degenerate_runs = 0;
};
RerunMetrics average_metrics(std::span<const RunRecord> runs);

/// Labels each entry by score >= threshold; entries without a score keep
/// their INCORRECT prediction.
RunRecord relabel_at_threshold(const RunRecord& run, double threshold);

using CandidateKey = std::pair<std::string, std::string>;

struct LabelStability {
    std::size_t consistent = 0;
    std::size_t reachable = 0;
    std::optional<double> ratio;  // nullopt when nothing is reachable
};

struct StabilityReport {
    LabelStability correct;
    LabelStability incorrect;
};

enum class Reachability {
    AnyPrediction,     // reachable: at least one run predicted the label
    MatchingTruthOnly  // additionally require ground truth == label
};

StabilityReport stability(std::span<const RunRecord> runs,
                          Reachability reachability = Reachability::AnyPrediction);

/// Candidates every run labeled `label` whose ground truth is `label`.
std::set<CandidateKey> consistent_set(std::span<const RunRecord> runs, Label label);

/// Exclusive Venn regions over three sets, indexed by membership bitmask
/// (bit 0 = first set, bit 1 = second, bit 2 = third); region 0 is unused.
struct OverlapRegions {
    std::array<std::size_t, 8> count{};

    std::size_t only(int which) const { return count[1u << which]; }
    std::size_t both(int a, int b) const { return count[(1u << a) | (1u << b)]; }
    std::size_t all() const { return count[7]; }
    std::size_t total() const;
};

struct OverlapReport {
    std::array<std::string, 3> approaches;
    OverlapRegions correct;
    OverlapRegions incorrect;
};

OverlapRegions overlap_regions(const std::vector<std::set<CandidateKey>>& sets);

/// Throws WrongApproachCount unless exactly three approaches are given.
OverlapReport overlap(const std::map<std::string, std::vector<RunRecord>>& runs_by_approach);

/// Mean total tokens per candidate, in thousands; nullopt for no entries.
std::optional<double> mean_kilotokens(std::span<const RunRecord> runs);
std::map<std::string, std::optional<double>> token_summary(
    const std::map<std::string, std::vector<RunRecord>>& runs_by_approach);

}  // namespace trails
