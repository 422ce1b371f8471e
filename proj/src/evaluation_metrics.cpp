#include "trails/evaluation_metrics.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RunRecord files

RunRecord parse_run_record(std::istream& in) {
    RunRecord run;
    bool first = true;
    std::set<CandidateKey> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(line_no, std::string("malformed run entry: ") + e.what());
        }
        try {
            const auto approach = obj.at("approach").get<std::string>();
            const auto run_index = obj.at("run_index").get<std::size_t>();
            if (first) {
                run.approach = approach;
                run.run_index = run_index;
                first = false;
            } else if (approach != run.approach || run_index != run.run_index) {
                throw FormatError(line_no, "entries of one file must share approach and run_index");
            }
            RunEntry e;
            e.task_id = obj.at("task_id").get<std::string>();
            e.candidate_id = obj.at("candidate_id").get<std::string>();
            auto predicted = parse_label(obj.at("predicted").get<std::string>());
            auto truth = parse_label(obj.at("ground_truth").get<std::string>());
            if (!predicted || !truth)
                throw FormatError(line_no, "labels must be \"CORRECT\" or \"INCORRECT\"");
            e.predicted = *predicted;
            e.ground_truth = *truth;
            e.tokens.prompt_tokens = obj.value("prompt_tokens", std::uint64_t{0});
            e.tokens.completion_tokens = obj.value("completion_tokens", std::uint64_t{0});
            if (obj.contains("score") && !obj["score"].is_null()) e.score = obj["score"].get<double>();
            if (obj.contains("reason") && !obj["reason"].is_null())
                e.reason = obj["reason"].get<std::string>();
            if (!seen.emplace(e.task_id, e.candidate_id).second)
                throw FormatError(line_no, "duplicate entry " + e.task_id + "/" + e.candidate_id);
            run.entries.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw FormatError(line_no, std::string("bad run entry: ") + e.what());
        }
    }
    return run;
}

RunRecord read_run_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read run record " + path.string());
    return parse_run_record(in);
}

void write_run_record(std::ostream& out, const RunRecord& run) {
    for (const auto& e : run.entries) {
        json obj{{"approach", run.approach},
                 {"run_index", run.run_index},
                 {"task_id", e.task_id},
                 {"candidate_id", e.candidate_id},
                 {"predicted", to_string(e.predicted)},
                 {"ground_truth", to_string(e.ground_truth)},
                 {"prompt_tokens", e.tokens.prompt_tokens},
                 {"completion_tokens", e.tokens.completion_tokens}};
        if (e.score) obj["score"] = *e.score;
        if (e.reason) obj["reason"] = *e.reason;
        out << obj.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Confusion-matrix metrics

void ConfusionMatrix::add(Label predicted, Label truth) {
    if (predicted == Label::Correct) (truth == Label::Correct ? tp : fp) += 1;
    else (truth == Label::Correct ? fn : tn) += 1;
}

ConfusionMatrix confusion(const RunRecord& run) {
    ConfusionMatrix m;
    for (const auto& e : run.entries) m.add(e.predicted, e.ground_truth);
    return m;
}

Metric mcc(const ConfusionMatrix& m) {
    const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
    const double fn = static_cast<double>(m.fn), tn = static_cast<double>(m.tn);
    if (m.tp + m.fp == 0 || m.tp + m.fn == 0 || m.tn + m.fp == 0 || m.tn + m.fn == 0)
        return Metric{0.0, true};
    // Each marginal is rooted separately so the product cannot overflow.
    const double denom =
        std::sqrt(tp + fp) * std::sqrt(tp + fn) * std::sqrt(tn + fp) * std::sqrt(tn + fn);
    return Metric{(tp * tn - fp * fn) / denom, false};
}

Metric p4(const ConfusionMatrix& m) {
    const double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
    const double fn = static_cast<double>(m.fn), tn = static_cast<double>(m.tn);
    const double agree = 4.0 * tp * tn;
    const double denom = agree + (tp + tn) * (fp + fn);
    if (denom == 0.0) return Metric{0.0, true};
    return Metric{agree / denom, false};
}

RerunMetrics average_metrics(std::span<const RunRecord> runs) {
    RerunMetrics out;
    for (const auto& run : runs) {
        const auto m = confusion(run);
        const auto a = mcc(m);
        const auto b = p4(m);
        out.mcc += a.value;
        out.p4 += b.value;
        if (a.degenerate || b.degenerate) ++out.degenerate_runs;
        ++out.runs;
    }
    if (out.runs) {
        out.mcc /= static_cast<double>(out.runs);
        out.p4 /= static_cast<double>(out.runs);
    }
    return out;
}

RunRecord relabel_at_threshold(const RunRecord& run, double threshold) {
    RunRecord out = run;
    for (auto& e : out.entries)
        if (e.score) e.predicted = *e.score >= threshold ? Label::Correct : Label::Incorrect;
    return out;
}

// ---------------------------------------------------------------------------
// Stability and overlap

namespace {

struct Tally {
    Label truth = Label::Incorrect;
    std::size_t correct_votes = 0;
    std::size_t runs = 0;
};

std::map<CandidateKey, Tally> tally(std::span<const RunRecord> runs) {
    std::map<CandidateKey, Tally> out;
    if (runs.empty()) return out;

    std::set<CandidateKey> reference;
    for (const auto& e : runs.front().entries) reference.emplace(e.task_id, e.candidate_id);
    for (const auto& run : runs) {
        std::set<CandidateKey> keys;
        for (const auto& e : run.entries) {
            keys.emplace(e.task_id, e.candidate_id);
            auto& t = out[{e.task_id, e.candidate_id}];
            t.truth = e.ground_truth;
            t.correct_votes += e.predicted == Label::Correct ? 1 : 0;
            t.runs += 1;
        }
        if (keys != reference)
            throw MismatchedRunSets("run " + std::to_string(run.run_index) + " of " + run.approach +
                                    " covers a different candidate set");
    }
    return out;
}

}  // namespace

StabilityReport stability(std::span<const RunRecord> runs, Reachability reachability) {
    StabilityReport report;
    for (const auto& [key, t] : tally(runs)) {
        const bool all_correct = t.correct_votes == t.runs;
        const bool all_incorrect = t.correct_votes == 0;
        const bool any_correct = t.correct_votes > 0;
        const bool any_incorrect = t.correct_votes < t.runs;
        const bool restrict = reachability == Reachability::MatchingTruthOnly;

        if (any_correct && (!restrict || t.truth == Label::Correct)) ++report.correct.reachable;
        if (any_incorrect && (!restrict || t.truth == Label::Incorrect)) ++report.incorrect.reachable;
        if (all_correct && t.truth == Label::Correct) ++report.correct.consistent;
        if (all_incorrect && t.truth == Label::Incorrect) ++report.incorrect.consistent;
    }
    for (auto* s : {&report.correct, &report.incorrect})
        if (s->reachable)
            s->ratio = static_cast<double>(s->consistent) / static_cast<double>(s->reachable);
    return report;
}

std::set<CandidateKey> consistent_set(std::span<const RunRecord> runs, Label label) {
    std::set<CandidateKey> out;
    for (const auto& [key, t] : tally(runs)) {
        const bool unanimous = label == Label::Correct ? t.correct_votes == t.runs : t.correct_votes == 0;
        if (unanimous && t.truth == label) out.insert(key);
    }
    return out;
}

std::size_t OverlapRegions::total() const {
    std::size_t sum = 0;
    for (std::size_t i = 1; i < count.size(); ++i) sum += count[i];
    return sum;
}

OverlapRegions overlap_regions(const std::vector<std::set<CandidateKey>>& sets) {
    if (sets.size() != 3)
        throw WrongApproachCount("overlap needs exactly 3 approaches, got " +
                                 std::to_string(sets.size()));
    std::set<CandidateKey> all;
    for (const auto& s : sets) all.insert(s.begin(), s.end());
    OverlapRegions regions;
    for (const auto& key : all) {
        unsigned mask = 0;
        for (unsigned i = 0; i < 3; ++i)
            if (sets[i].contains(key)) mask |= 1u << i;
        ++regions.count[mask];
    }
    return regions;
}

OverlapReport overlap(const std::map<std::string, std::vector<RunRecord>>& runs_by_approach) {
    if (runs_by_approach.size() != 3)
        throw WrongApproachCount("overlap needs exactly 3 approaches, got " +
                                 std::to_string(runs_by_approach.size()));
    OverlapReport report;
    std::vector<std::set<CandidateKey>> correct, incorrect;
    std::size_t i = 0;
    for (const auto& [approach, runs] : runs_by_approach) {
        report.approaches[i++] = approach;
        correct.push_back(consistent_set(runs, Label::Correct));
        incorrect.push_back(consistent_set(runs, Label::Incorrect));
    }
    report.correct = overlap_regions(correct);
    report.incorrect = overlap_regions(incorrect);
    return report;
}

std::optional<double> mean_kilotokens(std::span<const RunRecord> runs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& run : runs)
        for (const auto& e : run.entries) {
            sum += static_cast<double>(e.tokens.total());
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n) / 1000.0;
}

std::map<std::string, std::optional<double>> token_summary(
    const std::map<std::string, std::vector<RunRecord>>& runs_by_approach) {
    std::map<std::string, std::optional<double>> out;
    for (const auto& [approach, runs] : runs_by_approach) out[approach] = mean_kilotokens(runs);
    return out;
}

}  // namespace trails
