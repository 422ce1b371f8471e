#include "trails/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "trails/corpus.hpp"
#include "trails/error.hpp"
#include "trails/runner.hpp"
#include "trails/verdict_engine.hpp"

namespace trails::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::shared_ptr<LlmBackend> make_backend(const PipelineConfig& config) {
    if (config.backend == BackendKind::Mock)
        return std::make_shared<MockBackend>(load_mock_script(config.mock_script));
    HttpBackendOptions options;
    options.endpoint = config.endpoint;
    if (const char* key = std::getenv(config.api_key_env.c_str())) options.api_key = key;
    options.attempts = config.retry_attempts;
    options.backoff = std::chrono::milliseconds(config.retry_backoff_ms);
    options.timeout = std::chrono::seconds(config.request_timeout_s);
    return std::make_shared<HttpBackend>(std::move(options));
}

std::unique_ptr<Executor> make_executor(const PipelineConfig& config) {
    if (config.harness.empty())
        throw ExecutorUnavailable("no harness configured (set 'harness' or pass --harness)");
    HarnessOptions options;
    options.executable = config.harness;
    options.args = config.harness_args;
    options.pool_size = std::max<std::size_t>(config.harness_pool, config.workers);
    options.grace = std::chrono::milliseconds(config.harness_grace_ms);
    return std::make_unique<HarnessExecutor>(std::move(options));
}

PromptLibrary load_prompts(const PipelineConfig& config) {
    return config.templates_dir.empty() ? PromptLibrary::defaults()
                                        : PromptLibrary::load(config.templates_dir);
}

std::string run_file_name(const std::string& approach, std::size_t run_index) {
    return approach + "_run" + std::to_string(run_index) + ".jsonl";
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

std::string clip(std::string s, std::size_t width) {
    std::string flat;
    for (char c : s) {
        if (c == '\n') flat += "\\n";
        else if (c == '\t') flat += "\\t";
        else flat.push_back(c);
    }
    if (flat.size() > width) flat = flat.substr(0, width - 3) + "...";
    return flat;
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void print_assessment(const Assessment& a, std::ostream& out) {
    out << "task        " << a.task_id << "\n"
        << "candidate   " << a.candidate_id << "\n"
        << "label       " << to_string(a.label) << " (" << to_string(a.reason) << ")\n"
        << "score       " << (a.score ? fixed(*a.score) : std::string("n/a")) << " (threshold "
        << fixed(a.threshold, 2) << ")\n"
        << "scenarios   " << a.scenario_count << " processed, " << a.skipped_scenarios
        << " skipped" << (a.early_stopped ? ", early stop" : "") << "\n"
        << "tokens      " << a.tokens.prompt_tokens << " prompt + " << a.tokens.completion_tokens
        << " completion\n";
    if (a.unparseable_verdicts)
        out << "unparseable " << a.unparseable_verdicts << " verdict(s) excluded from the score\n";
    if (a.error) out << "error       " << *a.error << "\n";
    if (!a.verdicts.empty()) {
        out << "\n" << std::left << std::setw(10) << "input" << std::setw(6) << "scen"
            << std::setw(9) << "repairs" << std::setw(13) << "verdict"
            << "input -> output\n";
        for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
            const auto& in = a.inputs[i];
            out << std::left << std::setw(10) << in.input_id << std::setw(6) << in.scenario_index
                << std::setw(9) << in.repair_count << std::setw(13) << to_string(a.verdicts[i].label)
                << clip(in.payload.render(), 40) << " -> " << clip(in.output.text, 40) << "\n";
        }
    }
}

struct ResolvedCandidate {
    TaskSpec task;
    Candidate candidate;
};

ResolvedCandidate resolve(const AssessOptions& o) {
    if (!o.corpus.empty()) {
        auto records = load_corpus(o.corpus);
        for (const auto& r : records) {
            if (!o.task_id.empty() && r.task.task_id != o.task_id) continue;
            for (const auto& c : r.candidates) {
                if (!o.candidate_id.empty() && c.candidate_id != o.candidate_id) continue;
                return {r.task, c};
            }
        }
        throw ConfigError("no matching task/candidate in " + o.corpus.string());
    }
    if (o.spec_file.empty() || o.candidate_file.empty())
        throw ConfigError("assess needs --corpus or both --spec and --candidate");
    ResolvedCandidate rc;
    rc.task.task_id = o.task_id.empty() ? o.spec_file.stem().string() : o.task_id;
    rc.task.specification = read_file(o.spec_file);
    auto mode = parse_input_mode(o.input_mode);
    if (!mode) throw ConfigError("--mode must be STDIN or CALL");
    rc.task.input_mode = *mode;
    if (!o.entry_point.empty()) rc.task.entry_point = o.entry_point;
    rc.candidate.task_id = rc.task.task_id;
    rc.candidate.candidate_id =
        o.candidate_id.empty() ? o.candidate_file.stem().string() : o.candidate_id;
    rc.candidate.source_code = read_file(o.candidate_file);
    validate(rc.task);
    validate(rc.candidate);
    return rc;
}

}  // namespace

int cmd_assess(const AssessOptions& options, const PipelineConfig& config, std::ostream& out,
               std::ostream& err) {
    try {
        config.validate();
        auto rc = resolve(options);
        auto prompts = load_prompts(config);
        Gateway gateway(make_backend(config));
        auto executor = make_executor(config);
        auto assessment = assess(rc.task, rc.candidate, config, prompts, gateway, *executor,
                                 config.base_seed);
        print_assessment(assessment, out);
        const auto record = to_json(assessment).dump();
        if (!options.record.empty()) write_file(options.record, record + "\n");
        else out << "\nrecord " << record << "\n";
        return assessment.label == Label::Correct ? kExitCorrect : kExitIncorrect;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---------------------------------------------------------------------------
// Reports

std::map<std::string, std::vector<RunRecord>> load_runs(const fs::path& runs_dir) {
    std::map<std::string, std::vector<RunRecord>> runs;
    if (!fs::is_directory(runs_dir)) throw IoError("run directory not found: " + runs_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto run = read_run_record(f);
        if (run.entries.empty()) continue;
        runs[run.approach].push_back(std::move(run));
    }
    for (auto& [approach, list] : runs)
        std::sort(list.begin(), list.end(),
                  [](const RunRecord& a, const RunRecord& b) { return a.run_index < b.run_index; });
    return runs;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json stability_json(const LabelStability& s) {
    return {{"consistent", s.consistent}, {"reachable", s.reachable}, {"ratio", optional_number(s.ratio)}};
}

json regions_json(const OverlapRegions& r, const std::array<std::string, 3>& names) {
    json j = json::object();
    for (unsigned mask = 1; mask < 8; ++mask) {
        std::string key;
        for (unsigned i = 0; i < 3; ++i)
            if (mask & (1u << i)) key += (key.empty() ? "" : "&") + names[i];
        j[key] = r.count[mask];
    }
    return j;
}

}  // namespace

json build_report(const std::map<std::string, std::vector<RunRecord>>& runs,
                  const ReportOptions& options) {
    json report{{"threshold", options.threshold}, {"approaches", json::object()}};
    const auto reach = options.reachable_matching_truth ? Reachability::MatchingTruthOnly
                                                        : Reachability::AnyPrediction;
    for (const auto& [approach, list] : runs) {
        json a;
        a["runs"] = list.size();
        a["candidates"] = list.empty() ? 0 : list.front().entries.size();
        const bool scored = std::any_of(list.begin(), list.end(), [](const RunRecord& r) {
            return std::any_of(r.entries.begin(), r.entries.end(),
                               [](const RunEntry& e) { return e.score.has_value(); });
        });
        std::vector<RunRecord> at_threshold = list;
        if (scored)
            for (auto& r : at_threshold) r = relabel_at_threshold(r, options.threshold);

        std::size_t errors = 0;
        for (const auto& r : list)
            for (const auto& e : r.entries)
                if (e.reason && *e.reason == "ERROR") ++errors;
        a["errors"] = errors;

        const auto avg = average_metrics(at_threshold);
        a["mcc"] = avg.mcc;
        a["p4"] = avg.p4;
        a["degenerate_runs"] = avg.degenerate_runs;
        json per_run = json::array();
        for (const auto& r : at_threshold) {
            const auto m = confusion(r);
            per_run.push_back({{"run_index", r.run_index},
                               {"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn},
                               {"mcc", mcc(m).value}, {"p4", p4(m).value}});
        }
        a["per_run"] = std::move(per_run);
        if (scored) {
            json presets = json::object();
            for (double tau : kThresholdPresets) {
                std::vector<RunRecord> relabeled;
                for (const auto& r : list) relabeled.push_back(relabel_at_threshold(r, tau));
                const auto m = average_metrics(relabeled);
                presets[fixed(tau, 1)] = {{"mcc", m.mcc}, {"p4", m.p4}};
            }
            a["presets"] = std::move(presets);
        }
        a["kilotokens_per_task"] = optional_number(mean_kilotokens(list));
        if (list.size() >= 2) {
            try {
                const auto s = stability(at_threshold, reach);
                a["stability"] = {{"correct", stability_json(s.correct)},
                                  {"incorrect", stability_json(s.incorrect)}};
            } catch (const MismatchedRunSets& e) {
                a["stability"] = {{"error", e.what()}};
            }
        }
        report["approaches"][approach] = std::move(a);
    }

    std::vector<std::string> names = options.overlap_approaches;
    if (names.empty() && runs.size() == 3)
        for (const auto& [approach, list] : runs) names.push_back(approach);
    if (!names.empty()) {
        std::map<std::string, std::vector<RunRecord>> chosen;
        for (const auto& n : names) {
            auto it = runs.find(n);
            if (it == runs.end()) throw ConfigError("no runs for approach '" + n + "'");
            std::vector<RunRecord> list = it->second;
            for (auto& r : list) r = relabel_at_threshold(r, options.threshold);
            chosen[n] = std::move(list);
        }
        const auto o = overlap(chosen);
        report["overlap"] = {{"approaches", o.approaches},
                             {"correct", regions_json(o.correct, o.approaches)},
                             {"incorrect", regions_json(o.incorrect, o.approaches)}};
    }
    return report;
}

std::string render_report(const json& report) {
    std::ostringstream os;
    os << "Threshold " << fixed(report["threshold"].get<double>(), 2) << "\n\n";
    os << std::left << std::setw(18) << "approach" << std::setw(6) << "runs" << std::setw(8) << "MCC"
       << std::setw(8) << "P4";
    for (double tau : kThresholdPresets)
        os << std::setw(16) << ("MCC/P4@" + fixed(tau, 1));
    os << std::setw(12) << "ktok/task" << "errors\n";
    for (const auto& [name, a] : report["approaches"].items()) {
        os << std::left << std::setw(18) << name << std::setw(6) << a["runs"].get<std::size_t>()
           << std::setw(8) << fixed(a["mcc"].get<double>()) << std::setw(8)
           << fixed(a["p4"].get<double>());
        for (double tau : kThresholdPresets) {
            const auto key = fixed(tau, 1);
            if (a.contains("presets"))
                os << std::setw(16)
                   << (fixed(a["presets"][key]["mcc"].get<double>()) + "/" +
                       fixed(a["presets"][key]["p4"].get<double>()));
            else
                os << std::setw(16) << "-";
        }
        os << std::setw(12)
           << (a["kilotokens_per_task"].is_null() ? std::string("n/a")
                                                  : fixed(a["kilotokens_per_task"].get<double>(), 1))
           << a["errors"].get<std::size_t>() << "\n";
    }

    bool any_stability = false;
    for (const auto& [name, a] : report["approaches"].items()) {
        if (!a.contains("stability")) continue;
        if (!any_stability) {
            os << "\nStability (consistent / reachable)\n";
            any_stability = true;
        }
        const auto& s = a["stability"];
        if (s.contains("error")) {
            os << "  " << name << ": " << s["error"].get<std::string>() << "\n";
            continue;
        }
        auto cell = [](const json& l) {
            std::string r = std::to_string(l["consistent"].get<std::size_t>()) + "/" +
                            std::to_string(l["reachable"].get<std::size_t>());
            r += l["ratio"].is_null() ? " (n/a)" : " (" + fixed(100.0 * l["ratio"].get<double>(), 1) + "%)";
            return r;
        };
        os << "  " << std::left << std::setw(18) << name << "correct " << std::setw(20)
           << cell(s["correct"]) << "incorrect " << cell(s["incorrect"]) << "\n";
    }

    if (report.contains("overlap")) {
        os << "\nConsistently and correctly labeled candidates by region\n";
        for (const char* label : {"correct", "incorrect"}) {
            os << "  " << label << ":";
            for (const auto& [region, count] : report["overlap"][label].items())
                os << "  " << region << "=" << count.get<std::size_t>();
            os << "\n";
        }
    }
    return os.str();
}

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (!(options.threshold >= 0.0 && options.threshold <= 1.0))
            throw InvalidThreshold("threshold must lie in [0, 1]");
        const auto runs = load_runs(options.runs_dir);
        const auto report = build_report(runs, options);
        const auto text = render_report(report);
        out << text;
        if (!options.output_dir.empty()) {
            write_file(options.output_dir / "report.txt", text);
            write_file(options.output_dir / "report.json", report.dump(2) + "\n");
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_import_run(const ImportOptions& options, std::ostream& out, std::ostream& err) {
    try {
        auto run = read_run_record(options.file);
        if (run.entries.empty()) throw FormatError(0, "run record " + options.file.string() + " is empty");
        if (!options.approach.empty()) run.approach = options.approach;
        static const std::regex safe("^[A-Za-z0-9_.-]+$");
        if (!std::regex_match(run.approach, safe))
            throw FormatError(0, "approach tag '" + run.approach + "' is not a safe file name");
        std::ostringstream buffer;
        write_run_record(buffer, run);
        const auto target = options.runs_dir / run_file_name(run.approach, run.run_index);
        write_file(target, buffer.str());
        out << "imported " << run.entries.size() << " entries as " << target.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_evaluate(const EvaluateOptions& options, const PipelineConfig& config, std::ostream& out,
                 std::ostream& err) {
    try {
        config.validate();
        if (options.output_dir.empty()) throw ConfigError("evaluate needs an output directory");
        for (const auto& a : options.approaches)
            if (a != kTrailsApproach && a != kZeroShotApproach)
                throw ConfigError("unknown approach '" + a + "'");

        const auto records = load_corpus(options.corpus);
        const auto candidates = flatten(records);
        for (const auto& ref : candidates)
            if (!ref.candidate->ground_truth)
                throw ConfigError("candidate " + ref.task->task_id + "/" +
                                  ref.candidate->candidate_id + " has no ground_truth");
        const auto prompts = load_prompts(config);
        const auto runs_dir = options.output_dir / "runs";
        fs::create_directories(runs_dir);

        std::unique_ptr<Executor> executor;
        const bool wants_trails = std::find(options.approaches.begin(), options.approaches.end(),
                                            kTrailsApproach) != options.approaches.end();
        if (wants_trails) executor = make_executor(config);

        for (const auto& approach : options.approaches) {
            for (std::size_t run_index = 0; run_index < config.reruns; ++run_index) {
                const std::int64_t seed = config.base_seed + static_cast<std::int64_t>(run_index);
                Gateway gateway(make_backend(config));
                RunRecord run;
                std::size_t failures = 0;
                if (approach == kTrailsApproach) {
                    auto outcomes = assess_corpus(candidates, config, prompts, gateway, *executor, seed);
                    run = to_run_record(approach, run_index, candidates, outcomes);
                    std::ostringstream assessments;
                    for (std::size_t i = 0; i < outcomes.size(); ++i) {
                        if (outcomes[i].assessment) {
                            assessments << to_json(*outcomes[i].assessment).dump() << "\n";
                        } else {
                            ++failures;
                            err << "warning: " << candidates[i].task->task_id << "/"
                                << candidates[i].candidate->candidate_id << ": "
                                << outcomes[i].error << "\n";
                        }
                    }
                    write_file(options.output_dir / "assessments" / run_file_name(approach, run_index),
                               assessments.str());
                } else {
                    auto outcomes = baseline_corpus(candidates, config, prompts, gateway, seed);
                    run = to_run_record(approach, run_index, candidates, outcomes);
                    for (std::size_t i = 0; i < outcomes.size(); ++i)
                        if (!outcomes[i].verdict) {
                            ++failures;
                            err << "warning: " << candidates[i].task->task_id << "/"
                                << candidates[i].candidate->candidate_id << ": "
                                << outcomes[i].error << "\n";
                        }
                }
                std::ostringstream buffer;
                write_run_record(buffer, run);
                write_file(runs_dir / run_file_name(approach, run_index), buffer.str());
                out << approach << " run " << run_index << ": " << run.entries.size()
                    << " candidates, " << failures << " failed\n";
            }
        }

        for (const auto& file : options.imports) {
            std::ostringstream sink;
            if (cmd_import_run(ImportOptions{file, runs_dir, {}}, sink, err) != 0)
                return kExitError;
            out << sink.str();
        }

        ReportOptions report;
        report.runs_dir = runs_dir;
        report.output_dir = options.output_dir;
        report.threshold = config.threshold;
        out << "\n";
        return cmd_report(report, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

int cmd_calibrate(const CalibrateOptions& options, const PipelineConfig& config,
                  std::ostream& out, std::ostream& err) {
    try {
        config.validate();
        const auto records = load_corpus(options.corpus);
        const auto split = split_calibration(records, options.fraction, options.seed);
        const auto candidates = flatten(split.calibration);
        for (const auto& ref : candidates)
            if (!ref.candidate->ground_truth)
                throw ConfigError("calibration needs ground_truth on every candidate");

        const auto prompts = load_prompts(config);
        Gateway gateway(make_backend(config));
        auto executor = make_executor(config);
        const auto outcomes =
            assess_corpus(candidates, config, prompts, gateway, *executor, config.base_seed);

        std::vector<ScoredCandidate> scored;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            ScoredCandidate sc;
            sc.truth = *candidates[i].candidate->ground_truth;
            if (outcomes[i].assessment) sc.score = outcomes[i].assessment->score;
            else err << "warning: " << outcomes[i].error << "\n";
            scored.push_back(sc);
        }
        const auto grid = threshold_grid(options.grid_step);
        const auto result = calibrate(scored, grid);

        out << "calibration split: " << split.calibration.size() << " tasks ("
            << candidates.size() << " candidates), evaluation split: " << split.evaluation.size()
            << " tasks\n\n";
        out << std::left << std::setw(8) << "tau" << std::setw(6) << "tp" << std::setw(6) << "fp"
            << std::setw(6) << "fn" << std::setw(6) << "tn" << "MCC\n";
        json sweep = json::array();
        for (const auto& p : result.sweep) {
            out << std::left << std::setw(8) << fixed(p.threshold, 2) << std::setw(6) << p.matrix.tp
                << std::setw(6) << p.matrix.fp << std::setw(6) << p.matrix.fn << std::setw(6)
                << p.matrix.tn << fixed(p.mcc.value) << (p.mcc.degenerate ? " (degenerate)" : "")
                << "\n";
            sweep.push_back({{"threshold", p.threshold},
                             {"tp", p.matrix.tp}, {"fp", p.matrix.fp},
                             {"fn", p.matrix.fn}, {"tn", p.matrix.tn},
                             {"mcc", p.mcc.value}, {"degenerate", p.mcc.degenerate}});
        }
        out << "\nchosen threshold " << fixed(result.threshold, 2) << "\n";
        if (!options.output.empty()) {
            json report{{"threshold", result.threshold},
                        {"fraction", options.fraction},
                        {"seed", options.seed},
                        {"sweep", std::move(sweep)}};
            write_file(options.output, report.dump(2) + "\n");
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace trails::app
