#include "trails/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "trails/error.hpp"
#include "trails/text.hpp"

namespace trails {

using nlohmann::json;

std::string_view to_string(InputMode mode) {
    return mode == InputMode::Stdin ? "STDIN" : "CALL";
}

std::string_view to_string(Label label) {
    return label == Label::Correct ? "CORRECT" : "INCORRECT";
}

std::optional<InputMode> parse_input_mode(std::string_view text) {
    if (text == "STDIN") return InputMode::Stdin;
    if (text == "CALL") return InputMode::Call;
    return std::nullopt;
}

std::optional<Label> parse_label(std::string_view text) {
    if (text == "CORRECT") return Label::Correct;
    if (text == "INCORRECT") return Label::Incorrect;
    return std::nullopt;
}

namespace {

std::optional<std::string> task_problem(const TaskSpec& task) {
    if (task.task_id.empty()) return "task_id is empty";
    if (text::trim(task.specification).empty())
        return "task " + task.task_id + ": specification is blank";
    if (task.input_mode == InputMode::Call &&
        (!task.entry_point || text::trim(*task.entry_point).empty()))
        return "task " + task.task_id + ": CALL mode requires entry_point";
    return std::nullopt;
}

std::optional<std::string> candidate_problem(const Candidate& candidate) {
    if (candidate.candidate_id.empty()) return "candidate_id is empty";
    if (candidate.source_code.empty())
        return "candidate " + candidate.candidate_id + ": source_code is empty";
    return std::nullopt;
}

}  // namespace

void validate(const TaskSpec& task) {
    if (auto problem = task_problem(task)) throw FormatError(0, *problem);
}

void validate(const Candidate& candidate) {
    if (auto problem = candidate_problem(candidate)) throw FormatError(0, *problem);
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw FormatError(line, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw FormatError(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

std::vector<CorpusRecord> parse_corpus(std::istream& in) {
    std::vector<CorpusRecord> records;
    std::map<std::string, std::size_t> index_of_task;
    std::set<std::pair<std::string, std::string>> seen_candidates;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (text::trim(raw).empty()) continue;

        json obj;
        try {
            obj = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw FormatError(line_no, std::string("malformed record: ") + e.what());
        }
        if (!obj.is_object()) throw FormatError(line_no, "record is not an object");

        TaskSpec task;
        task.task_id = required_string(obj, "task_id", line_no);
        task.specification = required_string(obj, "specification", line_no);
        auto mode = parse_input_mode(required_string(obj, "input_mode", line_no));
        if (!mode) throw FormatError(line_no, "input_mode must be \"STDIN\" or \"CALL\"");
        task.input_mode = *mode;
        task.entry_point = optional_string(obj, "entry_point", line_no);
        task.source_dataset = optional_string(obj, "source_dataset", line_no);

        Candidate candidate;
        candidate.task_id = task.task_id;
        candidate.candidate_id = required_string(obj, "candidate_id", line_no);
        candidate.source_code = required_string(obj, "source_code", line_no);
        if (auto gt = optional_string(obj, "ground_truth", line_no)) {
            candidate.ground_truth = parse_label(*gt);
            if (!candidate.ground_truth)
                throw FormatError(line_no, "ground_truth must be \"CORRECT\" or \"INCORRECT\"");
        }

        if (auto problem = task_problem(task)) throw FormatError(line_no, *problem);
        if (auto problem = candidate_problem(candidate)) throw FormatError(line_no, *problem);

        if (!seen_candidates.emplace(task.task_id, candidate.candidate_id).second)
            throw FormatError(line_no, "duplicate candidate " + candidate.candidate_id +
                                           " for task " + task.task_id);

        auto [it, inserted] = index_of_task.try_emplace(task.task_id, records.size());
        if (inserted) {
            records.push_back(CorpusRecord{std::move(task), {}});
        } else {
            const TaskSpec& known = records[it->second].task;
            if (known.specification != task.specification || known.input_mode != task.input_mode ||
                known.entry_point != task.entry_point)
                throw FormatError(line_no, "task " + task.task_id +
                                               " redefined with a different specification, "
                                               "input_mode or entry_point");
        }
        records[it->second].candidates.push_back(std::move(candidate));
    }
    return records;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus file " + path.string());
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records) {
    for (const auto& record : records) {
        for (const auto& candidate : record.candidates) {
            json obj{{"task_id", record.task.task_id},
                     {"specification", record.task.specification},
                     {"input_mode", to_string(record.task.input_mode)},
                     {"candidate_id", candidate.candidate_id},
                     {"source_code", candidate.source_code}};
            if (record.task.entry_point) obj["entry_point"] = *record.task.entry_point;
            if (record.task.source_dataset) obj["source_dataset"] = *record.task.source_dataset;
            if (candidate.ground_truth) obj["ground_truth"] = to_string(*candidate.ground_truth);
            out << obj.dump() << '\n';
        }
    }
}

CalibrationSplit split_calibration(const std::vector<CorpusRecord>& records, double fraction,
                                   std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw InvalidFraction("calibration fraction must lie in (0, 1), got " +
                              std::to_string(fraction));
    if (records.empty()) throw InvalidFraction("cannot split an empty corpus");

    const std::size_t n = records.size();
    auto wanted = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    wanted = std::clamp<std::size_t>(wanted, 1, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<bool> in_calibration(n, false);
    for (std::size_t i = 0; i < wanted; ++i) in_calibration[order[i]] = true;

    CalibrationSplit split;
    for (std::size_t i = 0; i < n; ++i)
        (in_calibration[i] ? split.calibration : split.evaluation).push_back(records[i]);
    return split;
}

}  // namespace trails
