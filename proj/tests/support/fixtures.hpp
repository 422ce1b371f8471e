#pragma once

#include <string>

#include "trails/exec_bridge.hpp"

// Candidate programs used across the test suites. The sources are plain text;
// their behavior is simulated by the fake programs registered alongside them.
namespace trails::testing {

extern const std::string kEchoSource;          // STDIN: prints its input back
extern const std::string kCoinGameBuggySource; // STDIN: wrong winner on odd totals
extern const std::string kMinOpsSource;        // CALL: recursion crash when x > y
extern const std::string kBranchySource;       // STDIN: then/else coverage split
extern const std::string kInfiniteLoopSource;  // never terminates
extern const std::string kRaisesSource;        // uncaught exception on any input
extern const std::string kReadsTooMuchSource;  // needs two lines of input

inline constexpr const char* kMinOpsEntry = "minimumOperationsToMakeEqual";

/// Registers every program above with a fake executor.
void add_fixture_programs(FakeExecutor& executor);

}  // namespace trails::testing
