#include "fixtures.hpp"

#include <sstream>
#include <vector>

namespace trails::testing {

const std::string kEchoSource = R"(import sys
sys.stdout.write(sys.stdin.read())
)";

const std::string kCoinGameBuggySource = R"(t = int(input())
for _ in range(t):
    a, b = map(int, input().split())
    if (a + b) % 2 == 1:
        print("Bob")
    else:
        print("Alice")
)";

const std::string kMinOpsSource = R"(class Solution:
    def minimumOperationsToMakeEqual(self, x: int, y: int) -> int:
        if x <= y:
            return y - x

        @lru_cache(None)
        def min_operations(n):
            if n <= y:
                return y - n
            return 1 + min(
                n % 11 + 1 + min_operations(n // 11),
                n % 5 + 1 + min_operations(n // 5),
                min_operations(n - 1),
                min_operations(n + 1)
            )

        return min_operations(x)
)";

const std::string kBranchySource = R"(n = int(input())
if n % 2 == 0:
    print("even")
else:
    print("odd")
)";

const std::string kInfiniteLoopSource = R"(while True:
    pass
)";

const std::string kRaisesSource = R"(value = input()
raise RuntimeError("unsupported input: " + value)
)";

const std::string kReadsTooMuchSource = R"(first = input()
second = input()
print(first + second)
)";

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

FakeRun crash(std::string message) {
    FakeRun r;
    r.status = ExecStatus::Crash;
    r.error_text = std::move(message);
    return r;
}

bool parse_int(const std::string& text, long long& out) {
    std::istringstream in(text);
    return static_cast<bool>(in >> out) && (in >> std::ws).eof();
}

}  // namespace

void add_fixture_programs(FakeExecutor& executor) {
    executor.add_program(kEchoSource, [](const ExecutionRequest& req) {
        FakeRun r;
        r.output = req.payload.stdin_text.value_or("");
        r.lines = {1, 2};
        return r;
    });

    executor.add_program(kCoinGameBuggySource, [](const ExecutionRequest& req) {
        auto lines = lines_of(req.payload.stdin_text.value_or(""));
        long long t = 0;
        if (lines.empty() || !parse_int(lines[0], t))
            return crash("ValueError: invalid literal for int() with base 10");
        FakeRun r;
        r.lines = {1, 2};
        for (long long i = 0; i < t; ++i) {
            if (static_cast<std::size_t>(i + 1) >= lines.size())
                return crash("EOFError: EOF when reading a line");
            std::istringstream in(lines[i + 1]);
            long long a = 0, b = 0;
            if (!(in >> a >> b)) return crash("ValueError: not enough values to unpack");
            r.lines.insert({3, 4});
            if ((a + b) % 2 != 0) {
                r.lines.insert(5);
                r.output += "Bob\n";
            } else {
                r.lines.insert({6, 7});
                r.output += "Alice\n";
            }
        }
        return r;
    });

    executor.add_program(kMinOpsSource, [](const ExecutionRequest& req) {
        const auto& args = req.payload.call_args;
        if (!args || args->size() != 2 || !(*args)[0].is_number_integer() ||
            !(*args)[1].is_number_integer())
            return crash("TypeError: minimumOperationsToMakeEqual() expects two integers");
        const auto x = (*args)[0].get<long long>();
        const auto y = (*args)[1].get<long long>();
        if (x > y) return crash("RecursionError: maximum recursion depth exceeded in comparison");
        FakeRun r;
        r.output = std::to_string(y - x);
        r.lines = {1, 2, 3, 4};
        return r;
    });

    executor.add_program(kBranchySource, [](const ExecutionRequest& req) {
        long long n = 0;
        if (!parse_int(req.payload.stdin_text.value_or(""), n))
            return crash("ValueError: invalid literal for int() with base 10");
        FakeRun r;
        if (n % 2 == 0) {
            r.output = "even\n";
            r.lines = {1, 2, 3};
        } else {
            r.output = "odd\n";
            r.lines = {1, 2, 4, 5};
        }
        return r;
    });

    executor.add_program(kInfiniteLoopSource, [](const ExecutionRequest&) {
        FakeRun r;
        r.status = ExecStatus::Timeout;
        r.simulated_ms = 1LL << 40;
        return r;
    });

    executor.add_program(kRaisesSource, [](const ExecutionRequest& req) {
        return crash("RuntimeError: unsupported input: " + req.payload.stdin_text.value_or(""));
    });

    executor.add_program(kReadsTooMuchSource, [](const ExecutionRequest& req) {
        auto lines = lines_of(req.payload.stdin_text.value_or(""));
        if (lines.size() < 2) return crash("EOFError: EOF when reading a line");
        FakeRun r;
        r.output = lines[0] + lines[1] + "\n";
        r.lines = {1, 2, 3};
        return r;
    });
}

}  // namespace trails::testing
