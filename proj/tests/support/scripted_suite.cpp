#include "scripted_suite.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"

namespace trails::testing {

namespace {

const std::string kDoublerSource = R"(n = int(input())
if n > 0:
    print(2 * n)
elif n == 0:
    print(0)
else:
    print(-2 * abs(n))
)";

const std::string kTokenPickerSource = R"(values = input().split()
print(values[3])
)";

const std::string kReverserSource = R"(s = input()
if len(s) > 3:
    print(s[::-1])
else:
    print(s[-1::-1])
)";

const std::string kResidueSource = R"(n = int(input())
if n % 5 == 0:
    print("zero")
elif n % 5 == 1:
    print("one")
elif n % 5 == 2:
    print("two")
elif n % 5 == 3:
    print("three")
else:
    print("four")
)";

const std::string kNonNegativeSource = R"(n = int(input())
if n < 0:
    raise ValueError("negative")
print(n)
)";

const char* kIntegerProperties =
    "Input structure: a single integer n on one line\n"
    "Exceptions: ValueError when the line is not an integer\n"
    "Mockable dependencies: none\n"
    "Temporary resources: none\n";

std::string fenced(const std::string& body) { return "Here is the input.\n```\n" + body + "\n```\n"; }

bool parse_int(const std::string& text, long long& out) {
    std::istringstream in(text);
    return static_cast<bool>(in >> out) && (in >> std::ws).eof();
}

FakeRun crash(std::string message) {
    FakeRun r;
    r.status = ExecStatus::Crash;
    r.error_text = std::move(message);
    return r;
}

class ScriptBuilder {
public:
    explicit ScriptBuilder(std::vector<MockEntry>& script, std::string tag)
        : script_(script), tag_(std::move(tag)) {}

    ScriptBuilder& on(Stage stage, std::string response) {
        script_.push_back(MockEntry{tag_, stage, std::move(response), std::nullopt});
        return *this;
    }
    ScriptBuilder& gen(const std::string& body) { return on(Stage::InputGen, fenced(body)); }
    ScriptBuilder& repair(const std::string& body) { return on(Stage::InputRepair, fenced(body)); }
    ScriptBuilder& verify(const std::string& answer) { return on(Stage::Verify, answer); }

private:
    std::vector<MockEntry>& script_;
    std::string tag_;
};

ScriptedTask make_task(std::string name, std::string spec_text, InputMode mode,
                       std::string source, Label truth) {
    ScriptedTask t;
    t.name = name;
    t.record.task.task_id = name;
    t.record.task.specification = "[task:" + name + "] " + spec_text;
    t.record.task.input_mode = mode;
    if (mode == InputMode::Call) t.record.task.entry_point = kMinOpsEntry;
    t.record.task.source_dataset = "scripted";
    Candidate c;
    c.candidate_id = name + "-c1";
    c.task_id = name;
    c.source_code = std::move(source);
    c.ground_truth = truth;
    t.record.candidates.push_back(std::move(c));
    return t;
}

}  // namespace

std::vector<CorpusRecord> ScriptedSuite::corpus() const {
    std::vector<CorpusRecord> out;
    for (const auto& t : tasks) out.push_back(t.record);
    return out;
}

const ScriptedTask& ScriptedSuite::task(const std::string& name) const {
    for (const auto& t : tasks)
        if (t.name == name) return t;
    throw std::out_of_range("no scripted task " + name);
}

ScriptedSuite make_scripted_suite() {
    ScriptedSuite suite;
    auto& cfg = suite.config;
    cfg.backend = BackendKind::Mock;
    cfg.scenarios = 3;
    cfg.repair_budget = 3;
    cfg.inputs_per_scenario = 3;
    cfg.early_stop_after = 2;
    cfg.threshold = 0.8;
    cfg.reruns = 3;
    auto& script = suite.script;

    {
        // Every input validates; coverage collapses each scenario to one input.
        auto t = make_task("happy", "Read an integer n from standard input and print twice its value.",
                           InputMode::Stdin, kDoublerSource, Label::Correct);
        t.expected_label = Label::Correct;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 1.0;
        t.expected_batches = 3;
        t.expected_verdicts = 3;
        t.expected_baseline = Label::Correct;
        ScriptBuilder b(script, "[task:happy]");
        b.on(Stage::Scenarios,
             "1. Positive n\n   Preconditions: n > 0\n"
             "2. Zero\n   Preconditions: n = 0\n"
             "3. Negative n\n   Preconditions: n < 0\n")
            .on(Stage::Properties, kIntegerProperties)
            .gen("5").gen("12").gen("5")
            .gen("0").gen("0").gen("0")
            .gen("-3").gen("-8").gen("-1")
            .verify("5 doubled is 10, which matches.\nCORRECT")
            .verify("0 doubled is 0.\nCORRECT")
            .verify("-3 doubled is -6.\nCORRECT")
            .on(Stage::ZeroShotCot, "Each branch prints 2n.\nCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // The x > y scenario crashes twice and is repaired into a passing input.
        auto t = make_task("repair",
                           "Given two positive integers x and y, return the minimum number of "
                           "operations (increment, decrement, divide by 5 or 11 when divisible) "
                           "needed to make x equal to y.",
                           InputMode::Call, kMinOpsSource, Label::Incorrect);
        t.expected_label = Label::Correct;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 1.0;
        t.expected_batches = 2;
        t.expected_verdicts = 2;
        t.expected_baseline = Label::Correct;
        ScriptBuilder b(script, "[task:repair]");
        b.on(Stage::Scenarios,
             "1. x greater than y\n   Preconditions: x > y\n"
             "2. x not greater than y\n   Preconditions: x <= y\n")
            .on(Stage::Properties,
                "Input structure: two integers x and y passed as arguments\n"
                "Exceptions: none\nMockable dependencies: none\nTemporary resources: none\n")
            .on(Stage::InputGen, "```json\n[30, 5]\n```")
            .on(Stage::InputRepair, "Smaller values should help.\n```json\n[31, 4]\n```")
            .on(Stage::InputRepair, "```json\n{\"args\": [2, 9]}\n```")
            .on(Stage::InputGen, "```json\n[3, 10]\n```")
            .on(Stage::InputGen, "```\nminimumOperationsToMakeEqual(1, 1)\n```")
            .on(Stage::InputGen, "```json\n[4, 6]\n```")
            .verify("From 2 to 9 takes 7 increments.\nCORRECT")
            .verify("From 3 to 10 takes 7 increments.\nCORRECT")
            .on(Stage::ZeroShotCot, "The recursion explores all operations.\nCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // Two consecutive scenarios fail completely; the third is never tried.
        auto t = make_task("early", "Read four words from one line and print the fourth.",
                           InputMode::Stdin, kTokenPickerSource, Label::Incorrect);
        t.expected_label = Label::Incorrect;
        t.expected_reason = DecisionReason::EarlyStop;
        t.expected_batches = 2;
        t.expected_verdicts = 0;
        t.expected_early_stop = true;
        t.expected_baseline = Label::Incorrect;
        ScriptBuilder b(script, "[task:early]");
        b.on(Stage::Scenarios,
             "1. Four short words\n2. Words with punctuation\n3. Long words\n")
            .on(Stage::Properties,
                "Input structure: one line of words\nExceptions: IndexError\n"
                "Mockable dependencies: none\nTemporary resources: none\n")
            .gen("a b c").repair("a b").repair("a")
            .gen("x, y").repair("x,").repair("x")
            .on(Stage::ZeroShotCot, "values[3] requires four tokens.\nINCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // A single scenario that never validates, one answer without a block.
        auto t = make_task("novalid", "Read a word and print it unchanged.", InputMode::Stdin,
                           kRaisesSource, Label::Incorrect);
        t.expected_label = Label::Incorrect;
        t.expected_reason = DecisionReason::NoValidInputs;
        t.expected_batches = 1;
        t.expected_verdicts = 0;
        t.expected_baseline = Label::Incorrect;
        ScriptBuilder b(script, "[task:novalid]");
        b.on(Stage::Scenarios, "1. Any single word\n")
            .on(Stage::Properties, "Input structure: a single word\n")
            .on(Stage::InputGen, "I cannot think of an input for this scenario.")
            .gen("hello").repair("world")
            .on(Stage::ZeroShotCot, "It always raises.\nINCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // One verdict never parses and is left out of the score.
        auto t = make_task("unparseable", "Read a string and print it reversed.", InputMode::Stdin,
                           kReverserSource, Label::Correct);
        t.expected_label = Label::Correct;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 1.0;
        t.expected_batches = 1;
        t.expected_verdicts = 2;
        t.expected_baseline = Label::Incorrect;
        t.baseline_unparseable = true;
        ScriptBuilder b(script, "[task:unparseable]");
        b.on(Stage::Scenarios, "- Short strings\n  Preconditions: length at most 3\n")
            .on(Stage::Properties, "Input structure: one line of text\n")
            .gen("abc").gen("abcdef").gen("xy")
            .verify("The output seems plausible.")
            .verify("Hard to say without more context.")
            .verify("fedcba is abcdef reversed.\nCORRECT")
            .on(Stage::ZeroShotCot, "Both branches reverse the string, I think.")
            .on(Stage::ZeroShotCot, "Still thinking about it.");
        suite.tasks.push_back(std::move(t));
    }
    {
        // Four of five verdicts agree: the score sits exactly on the threshold.
        auto t = make_task("boundary",
                           "Read a non-negative integer n and print the English name of n mod 5.",
                           InputMode::Stdin, kResidueSource, Label::Correct);
        t.expected_label = Label::Correct;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 0.8;
        t.expected_batches = 2;
        t.expected_verdicts = 5;
        t.expected_baseline = Label::Correct;
        ScriptBuilder b(script, "[task:boundary]");
        b.on(Stage::Scenarios, "1. Small n\n2. Large n\n")
            .on(Stage::Properties, kIntegerProperties)
            .gen("1").gen("2").gen("3")
            .gen("4").gen("5").gen("9")
            .verify("1 mod 5 is 1.\nCORRECT")
            .verify("2 mod 5 is 2.\nCORRECT")
            .verify("I expected four here.\nINCORRECT")
            .verify("4 mod 5 is 4.\nCORRECT")
            .verify("5 mod 5 is 0.\nCORRECT")
            .on(Stage::ZeroShotCot, "All residues are handled.\nCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // Three of four: just under the threshold.
        auto t = make_task("below",
                           "Read a non-negative integer n and print the English name of n mod 5, "
                           "or 'five' when n is a positive multiple of 5.",
                           InputMode::Stdin, kResidueSource, Label::Incorrect);
        t.expected_label = Label::Incorrect;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 0.75;
        t.expected_batches = 2;
        t.expected_verdicts = 4;
        t.expected_baseline = Label::Correct;
        ScriptBuilder b(script, "[task:below]");
        b.on(Stage::Scenarios, "1. Small n\n2. Multiples of five\n")
            .on(Stage::Properties, kIntegerProperties)
            .gen("1").gen("2").gen("1")
            .gen("3").gen("10").gen("8")
            .verify("CORRECT")
            .verify("CORRECT")
            .verify("CORRECT")
            .verify("10 is a positive multiple of 5, so 'five' was expected.\nINCORRECT")
            .on(Stage::ZeroShotCot, "Looks right.\nCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // Skipped, valid, skipped: the run of skips resets, so no early stop.
        // The crashing scenarios are never verified, so the buggy candidate
        // passes on its one valid input.
        auto t = make_task("skipreset", "Read an integer n and print its absolute value.",
                           InputMode::Stdin, kNonNegativeSource, Label::Incorrect);
        t.expected_label = Label::Correct;
        t.expected_reason = DecisionReason::Score;
        t.expected_score = 1.0;
        t.expected_batches = 3;
        t.expected_verdicts = 1;
        t.expected_baseline = Label::Incorrect;
        ScriptBuilder b(script, "[task:skipreset]");
        b.on(Stage::Scenarios, "1. Negative n\n2. Positive n\n3. Large negative n\n")
            .on(Stage::Properties, kIntegerProperties)
            .gen("-1").repair("-2").repair("-3")
            .gen("4").gen("5").gen("6")
            .gen("-400").repair("-500").repair("-600")
            .verify("4 is already non-negative.\nCORRECT")
            .on(Stage::ZeroShotCot, "Negative numbers raise.\nINCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    {
        // The scenario answer never parses.
        auto t = make_task("badscenarios", "Echo the input exactly.", InputMode::Stdin,
                           kEchoSource, Label::Correct);
        t.expected_label = Label::Incorrect;
        t.expected_reason = DecisionReason::NoValidInputs;
        t.expected_batches = 0;
        t.expected_verdicts = 0;
        t.expected_baseline = Label::Correct;
        ScriptBuilder b(script, "[task:badscenarios]");
        b.on(Stage::Scenarios, "I am not sure how to split this specification.")
            .on(Stage::Scenarios, "Honestly it is a single behavior.")
            .on(Stage::ZeroShotCot, "It copies stdin to stdout.\nCORRECT");
        suite.tasks.push_back(std::move(t));
    }
    return suite;
}

void add_suite_programs(FakeExecutor& executor) {
    add_fixture_programs(executor);

    executor.add_program(kDoublerSource, [](const ExecutionRequest& req) {
        long long n = 0;
        if (!parse_int(req.payload.stdin_text.value_or(""), n))
            return crash("ValueError: invalid literal for int() with base 10");
        FakeRun r;
        r.output = std::to_string(2 * n) + "\n";
        if (n > 0) r.lines = {1, 2, 3};
        else if (n == 0) r.lines = {1, 2, 4, 5};
        else r.lines = {1, 2, 4, 6, 7};
        return r;
    });

    executor.add_program(kTokenPickerSource, [](const ExecutionRequest& req) {
        std::istringstream in(req.payload.stdin_text.value_or(""));
        std::vector<std::string> words;
        for (std::string w; in >> w;) words.push_back(w);
        if (words.size() < 4) return crash("IndexError: list index out of range");
        FakeRun r;
        r.output = words[3] + "\n";
        r.lines = {1, 2};
        return r;
    });

    executor.add_program(kReverserSource, [](const ExecutionRequest& req) {
        std::string s = req.payload.stdin_text.value_or("");
        FakeRun r;
        r.lines = s.size() > 3 ? std::set<std::uint32_t>{1, 2, 3} : std::set<std::uint32_t>{1, 2, 4, 5};
        r.output = std::string(s.rbegin(), s.rend()) + "\n";
        return r;
    });

    executor.add_program(kResidueSource, [](const ExecutionRequest& req) {
        static const char* names[] = {"zero", "one", "two", "three", "four"};
        long long n = 0;
        if (!parse_int(req.payload.stdin_text.value_or(""), n) || n < 0)
            return crash("ValueError: invalid literal for int() with base 10");
        const int r5 = static_cast<int>(n % 5);
        FakeRun r;
        r.output = std::string(names[r5]) + "\n";
        r.lines = {1, 2};
        // Each elif taken adds its test line; the matching branch adds its body.
        for (int k = 1; k <= r5 && k <= 3; ++k) r.lines.insert(static_cast<std::uint32_t>(2 * k + 2));
        r.lines.insert(static_cast<std::uint32_t>(r5 == 4 ? 11 : 2 * r5 + 3));
        return r;
    });

    executor.add_program(kNonNegativeSource, [](const ExecutionRequest& req) {
        long long n = 0;
        if (!parse_int(req.payload.stdin_text.value_or(""), n))
            return crash("ValueError: invalid literal for int() with base 10");
        if (n < 0) return crash("ValueError: negative");
        FakeRun r;
        r.output = std::to_string(n) + "\n";
        r.lines = {1, 2, 4};
        return r;
    });
}

void write_mock_script(const std::string& path, const std::vector<MockEntry>& script) {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& e : script) {
        nlohmann::json j{{"match", e.match}, {"response", e.response}};
        if (e.stage) j["stage"] = std::string(to_string(*e.stage));
        if (e.usage) {
            j["prompt_tokens"] = e.usage->prompt_tokens;
            j["completion_tokens"] = e.usage->completion_tokens;
        }
        out << j.dump() << "\n";
    }
}

}  // namespace trails::testing
