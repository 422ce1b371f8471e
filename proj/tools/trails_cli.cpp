#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trails/app.hpp"
#include "trails/config.hpp"
#include "trails/error.hpp"

namespace {

struct ConfigFlags {
    std::string config_file;
    std::map<std::string, std::string> overrides;
    std::vector<std::string> settings;  // repeated --set key=value

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "Key/value config file")->check(CLI::ExistingFile);
        struct Flag {
            const char* name;
            const char* key;
            const char* help;
        };
        static const Flag flags[] = {
            {"--scenarios", "scenarios", "Scenario cap s"},
            {"--repair-budget", "repair_budget", "Per-scenario generate+repair budget g"},
            {"--inputs-per-scenario", "inputs_per_scenario", "Validated inputs kept per scenario"},
            {"--threshold", "threshold", "Decision threshold tau in [0,1]"},
            {"--early-stop-after", "early_stop_after", "Consecutive skipped scenarios before giving up"},
            {"--timeout-ms", "timeout_ms", "Per-execution timeout"},
            {"--temperature", "temperature", "Sampling temperature"},
            {"--reruns", "reruns", "Independent runs per approach"},
            {"--workers", "workers", "Candidates assessed in parallel"},
            {"--seed", "seed", "Base seed (run k uses seed+k)"},
            {"--backend", "backend", "live or mock"},
            {"--endpoint", "endpoint", "OpenAI-compatible chat completions URL"},
            {"--model", "model", "Model name sent to the endpoint"},
            {"--api-key-env", "api_key_env", "Environment variable holding the API key"},
            {"--mock-script", "mock_script", "JSONL script for the mock backend"},
            {"--templates", "templates_dir", "Directory overriding built-in prompt templates"},
            {"--harness", "harness", "Sandbox harness executable"},
            {"--harness-args", "harness_args", "Space-separated harness arguments"},
            {"--harness-pool", "harness_pool", "Maximum concurrent harness processes"},
        };
        for (const auto& f : flags) {
            auto* opt = cmd->add_option_function<std::string>(
                f.name, [this, key = std::string(f.key)](const std::string& v) { overrides[key] = v; },
                f.help);
            opt->group("Pipeline");
        }
        cmd->add_option("--set", settings, "Raw config override key=value (repeatable)")
            ->group("Pipeline");
    }

    trails::PipelineConfig resolve() const {
        trails::PipelineConfig config =
            config_file.empty() ? trails::PipelineConfig{} : trails::load_config(config_file);
        for (const auto& [key, value] : overrides) config.set(key, value);
        for (const auto& s : settings) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw trails::ConfigError("--set expects key=value, got " + s);
            config.set(s.substr(0, eq), s.substr(eq + 1));
        }
        return config;
    }
};

}  // namespace

int main(int argc, char** argv) {
    namespace app = trails::app;
    CLI::App cli{"Test-driven correctness assessment of candidate programs"};
    cli.require_subcommand(1);

    app::AssessOptions assess;
    ConfigFlags assess_flags;
    auto* assess_cmd = cli.add_subcommand("assess", "Assess one candidate against its specification");
    assess_cmd->add_option("--corpus", assess.corpus, "Corpus JSONL")->check(CLI::ExistingFile);
    assess_cmd->add_option("--task", assess.task_id, "Task id");
    assess_cmd->add_option("--candidate-id", assess.candidate_id, "Candidate id");
    assess_cmd->add_option("--spec", assess.spec_file, "Specification text file")->check(CLI::ExistingFile);
    assess_cmd->add_option("--candidate", assess.candidate_file, "Candidate source file")
        ->check(CLI::ExistingFile);
    assess_cmd->add_option("--mode", assess.input_mode, "STDIN or CALL");
    assess_cmd->add_option("--entry-point", assess.entry_point, "Function name for CALL mode");
    assess_cmd->add_option("--record", assess.record, "Write the JSON assessment here");
    assess_flags.attach(assess_cmd);

    app::EvaluateOptions evaluate;
    ConfigFlags evaluate_flags;
    auto* evaluate_cmd = cli.add_subcommand("evaluate", "Run approaches over a labeled corpus");
    evaluate_cmd->add_option("--corpus", evaluate.corpus, "Corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--out", evaluate.output_dir, "Output directory")->required();
    evaluate_cmd->add_option("--approach", evaluate.approaches, "trails and/or zero_shot_cot")
        ->capture_default_str();
    evaluate_cmd->add_option("--import", evaluate.imports, "Extra RunRecord files to include")
        ->check(CLI::ExistingFile);
    evaluate_flags.attach(evaluate_cmd);

    app::CalibrateOptions calibrate;
    ConfigFlags calibrate_flags;
    auto* calibrate_cmd = cli.add_subcommand("calibrate", "Choose tau on a calibration split");
    calibrate_cmd->add_option("--corpus", calibrate.corpus, "Corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    calibrate_cmd->add_option("--fraction", calibrate.fraction, "Calibration share of tasks")
        ->capture_default_str();
    calibrate_cmd->add_option("--split-seed", calibrate.seed, "Seed for the task split")
        ->capture_default_str();
    calibrate_cmd->add_option("--step", calibrate.grid_step, "Threshold grid step")
        ->capture_default_str();
    calibrate_cmd->add_option("--output", calibrate.output, "Write the sweep as JSON");
    calibrate_flags.attach(calibrate_cmd);

    app::ImportOptions import;
    auto* import_cmd = cli.add_subcommand("import-run", "Validate and store an external RunRecord");
    import_cmd->add_option("file", import.file, "RunRecord JSONL")->required()->check(CLI::ExistingFile);
    import_cmd->add_option("--runs", import.runs_dir, "Run directory")->required();
    import_cmd->add_option("--approach", import.approach, "Override the approach tag");

    app::ReportOptions report;
    auto* report_cmd = cli.add_subcommand("report", "Metrics, stability and overlap over stored runs");
    report_cmd->add_option("--runs", report.runs_dir, "Run directory")->required();
    report_cmd->add_option("--out", report.output_dir, "Write report.txt and report.json here");
    report_cmd->add_option("--threshold", report.threshold, "Threshold for scored approaches")
        ->capture_default_str();
    report_cmd->add_option("--overlap", report.overlap_approaches, "Exactly three approach tags")
        ->delimiter(',');
    report_cmd->add_flag("--reachable-matching-truth", report.reachable_matching_truth,
                         "Count a candidate as reachable only when its truth matches the label");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : app::kExitError;
    }

    try {
        if (*assess_cmd) return app::cmd_assess(assess, assess_flags.resolve(), std::cout, std::cerr);
        if (*evaluate_cmd)
            return app::cmd_evaluate(evaluate, evaluate_flags.resolve(), std::cout, std::cerr);
        if (*calibrate_cmd)
            return app::cmd_calibrate(calibrate, calibrate_flags.resolve(), std::cout, std::cerr);
        if (*import_cmd) return app::cmd_import_run(import, std::cout, std::cerr);
        if (*report_cmd) return app::cmd_report(report, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return app::kExitError;
}
