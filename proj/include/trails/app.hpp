#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trails/config.hpp"
#include "trails/evaluation_metrics.hpp"
#include "trails/exec_bridge.hpp"
#include "trails/llm_gateway.hpp"

// Command implementations behind the `trails` executable. Each returns the
// process exit code.
namespace trails::app {

inline constexpr int kExitCorrect = 0;
inline constexpr int kExitIncorrect = 1;
inline constexpr int kExitError = 2;

inline constexpr const char* kTrailsApproach = "trails";
inline constexpr const char* kZeroShotApproach = "zero_shot_cot";

/// A fresh backend per call: mock scripts restart from the top.
std::shared_ptr<LlmBackend> make_backend(const PipelineConfig& config);
std::unique_ptr<Executor> make_executor(const PipelineConfig& config);
PromptLibrary load_prompts(const PipelineConfig& config);

struct AssessOptions {
    // Either a corpus entry ...
    std::filesystem::path corpus;
    std::string task_id;
    std::string candidate_id;
    // ... or a specification file plus a candidate file.
    std::filesystem::path spec_file;
    std::filesystem::path candidate_file;
    std::string input_mode = "STDIN";
    std::string entry_point;

    std::filesystem::path record;  // machine-readable Assessment output
};

int cmd_assess(const AssessOptions& options, const PipelineConfig& config, std::ostream& out,
               std::ostream& err);

struct EvaluateOptions {
    std::filesystem::path corpus;
    std::vector<std::string> approaches{kTrailsApproach, kZeroShotApproach};
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> imports;
};

int cmd_evaluate(const EvaluateOptions& options, const PipelineConfig& config, std::ostream& out,
                 std::ostream& err);

struct CalibrateOptions {
    std::filesystem::path corpus;
    double fraction = 0.2;
    std::uint64_t seed = 0;
    double grid_step = 0.05;
    std::filesystem::path output;  // JSON calibration report
};

int cmd_calibrate(const CalibrateOptions& options, const PipelineConfig& config,
                  std::ostream& out, std::ostream& err);

struct ImportOptions {
    std::filesystem::path file;
    std::filesystem::path runs_dir;
    std::string approach;  // overrides the file's approach tag when set
};

int cmd_import_run(const ImportOptions& options, std::ostream& out, std::ostream& err);

struct ReportOptions {
    std::filesystem::path runs_dir;
    std::filesystem::path output_dir;  // report.txt / report.json; empty prints only
    double threshold = 0.8;
    std::vector<std::string> overlap_approaches;  // default: all, when exactly three
    bool reachable_matching_truth = false;
};

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err);

// Report assembly, exposed for tests.
std::map<std::string, std::vector<RunRecord>> load_runs(const std::filesystem::path& runs_dir);
nlohmann::json build_report(const std::map<std::string, std::vector<RunRecord>>& runs,
                            const ReportOptions& options);
std::string render_report(const nlohmann::json& report);

std::string run_file_name(const std::string& approach, std::size_t run_index);

}  // namespace trails::app
