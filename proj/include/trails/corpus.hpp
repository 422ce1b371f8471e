#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trails {

enum class InputMode { Stdin, Call };
enum class Label { Correct, Incorrect };

std::string_view to_string(InputMode mode);
std::string_view to_string(Label label);
std::optional<InputMode> parse_input_mode(std::string_view text);
std::optional<Label> parse_label(std::string_view text);

struct TaskSpec {
    std::string task_id;
    std::string specification;
    InputMode input_mode = InputMode::Stdin;
    std::optional<std::string> entry_point;
    std::optional<std::string> source_dataset;

    bool operator==(const TaskSpec&) const = default;
};

struct Candidate {
    std::string candidate_id;
    std::string task_id;
    std::string source_code;
    std::optional<Label> ground_truth;

    bool operator==(const Candidate&) const = default;
};

struct CorpusRecord {
    TaskSpec task;
    std::vector<Candidate> candidates;

    bool operator==(const CorpusRecord&) const = default;
};

/// Reads a line-delimited corpus (one JSON object per line, one candidate per
/// line). Lines sharing a task_id are grouped under one record in order of
/// first appearance. Blank lines are ignored.
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
std::vector<CorpusRecord> parse_corpus(std::istream& in);

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);

/// Throws FormatError(0, ...) when a task or candidate breaks its invariants.
void validate(const TaskSpec& task);
void validate(const Candidate& candidate);

struct CalibrationSplit {
    std::vector<CorpusRecord> calibration;
    std::vector<CorpusRecord> evaluation;
};

/// Deterministic shuffle-and-cut. Calibration size is round(fraction * n),
/// at least 1. Both halves keep the input's relative order.
CalibrationSplit split_calibration(const std::vector<CorpusRecord>& records, double fraction,
                                   std::uint64_t seed);

}  // namespace trails
