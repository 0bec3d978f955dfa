#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optloop/optreport.hpp"

namespace optloop {

// User-supplied program that builds/runs the candidate, checks correctness,
// and prints "SCORE: <ms>". Invoked in the working directory holding the
// candidate source.
struct HarnessSpec {
    std::vector<std::string> command;
    double timeout_seconds = 600.0;

    bool operator==(const HarnessSpec&) const = default;
};

struct CompileFailed {
    std::string messages;
};

struct TestsFailed {
    std::string messages;
};

struct Passed {
    long long score_ms = 0;
};

using EvalResult = std::variant<CompileFailed, TestsFailed, Passed>;

std::string eval_outcome_name(const EvalResult& result);

// Syntax-check pass; nullopt means the candidate compiles.
std::optional<CompileFailed> compile_check(const CompilerSpec& compiler, const std::string& source,
                                           const std::string& workdir = {});

// Last "SCORE: <number>" line on stdout wins; fractional scores truncate
// toward zero.
std::optional<long long> parse_score(const std::string& out);

// Exit 0 plus a score line is the only passing shape; timeouts and silent
// exits become TestsFailed with a synthesized message.
std::variant<TestsFailed, Passed> run_harness(const HarnessSpec& spec, const std::string& workdir);

// compile_check, then the full optimized build, then the harness. A candidate
// that fails to compile never reaches the harness.
EvalResult evaluate_candidate(const CompilerSpec& compiler, const HarnessSpec& harness,
                              const std::string& source, const std::string& workdir);

}  // namespace optloop
