#include "optloop/evaluator.hpp"

#include <cctype>
#include <limits>
#include <string_view>

#include "optloop/subprocess.hpp"

namespace optloop {
namespace {

std::string compiler_failure_messages(const CompilerRun& run) {
    if (!run.err.empty()) return run.err;
    if (!run.out.empty()) return run.out;
    return "compiler exited with status " + std::to_string(run.exit_status) +
           " and produced no output";
}

std::string combine_output(const std::string& out, const std::string& err) {
    if (out.empty()) return err;
    if (err.empty()) return out;
    std::string combined = out;
    if (combined.back() != '\n') combined += '\n';
    combined += err;
    return combined;
}

std::string format_seconds(double seconds) {
    long long whole = static_cast<long long>(seconds);
    if (static_cast<double>(whole) == seconds) return std::to_string(whole);
    std::string text = std::to_string(seconds);
    while (!text.empty() && text.back() == '0') text.pop_back();
    if (!text.empty() && text.back() == '.') text.pop_back();
    return text;
}

// Strict shape: the line starts with "SCORE:", then optional blanks, a decimal
// number, optional blanks, end of line.
std::optional<long long> parse_score_line(const std::string& line) {
    constexpr std::string_view kPrefix = "SCORE:";
    if (line.rfind(kPrefix, 0) != 0) return std::nullopt;
    std::size_t i = kPrefix.size();
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t digits_begin = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_begin) return std::nullopt;
    long long value = 0;
    for (std::size_t d = digits_begin; d < i; ++d) {
        if (value > (std::numeric_limits<long long>::max() - (line[d] - '0')) / 10) {
            return std::nullopt;
        }
        value = value * 10 + (line[d] - '0');
    }
    if (i < line.size() && line[i] == '.') {
        ++i;
        std::size_t frac_begin = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == frac_begin) return std::nullopt;
    }
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i != line.size()) return std::nullopt;
    return value;
}

}  // namespace

std::string eval_outcome_name(const EvalResult& result) {
    if (std::holds_alternative<CompileFailed>(result)) return "compile_failed";
    if (std::holds_alternative<TestsFailed>(result)) return "tests_failed";
    return "passed";
}

std::optional<CompileFailed> compile_check(const CompilerSpec& compiler, const std::string& source,
                                           const std::string& workdir) {
    CompilerRun run = run_compiler(compiler, source, CompileMode::syntax_check, workdir);
    if (run.exit_status == 0) return std::nullopt;
    return CompileFailed{compiler_failure_messages(run)};
}

std::optional<long long> parse_score(const std::string& out) {
    std::optional<long long> last;
    std::size_t start = 0;
    while (start <= out.size()) {
        std::size_t end = out.find('\n', start);
        std::size_t len = (end == std::string::npos ? out.size() : end) - start;
        if (auto score = parse_score_line(out.substr(start, len))) last = score;
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return last;
}

std::variant<TestsFailed, Passed> run_harness(const HarnessSpec& spec,
                                              const std::string& workdir) {
    ProcessResult result = run_process(spec.command, workdir, spec.timeout_seconds);
    if (result.timed_out) {
        return TestsFailed{"harness timed out after " + format_seconds(spec.timeout_seconds) +
                           " seconds"};
    }
    if (result.exit_status == 0) {
        if (auto score = parse_score(result.out)) return Passed{*score};
        std::string messages = "harness passed but emitted no SCORE line";
        std::string output = combine_output(result.out, result.err);
        if (!output.empty()) messages += "\n" + output;
        return TestsFailed{std::move(messages)};
    }
    std::string messages = combine_output(result.out, result.err);
    if (messages.empty()) {
        messages = "harness exited with status " + std::to_string(result.exit_status) +
                   " and produced no output";
    }
    return TestsFailed{std::move(messages)};
}

EvalResult evaluate_candidate(const CompilerSpec& compiler, const HarnessSpec& harness,
                              const std::string& source, const std::string& workdir) {
    if (auto failed = compile_check(compiler, source, workdir)) return *failed;

    // Full optimized build so the harness finds a fresh artifact; report flags
    // are irrelevant here.
    CompilerSpec build = compiler;
    build.report_flags.clear();
    CompilerRun run = run_compiler(build, source, CompileMode::report, workdir);
    if (run.exit_status != 0) return CompileFailed{compiler_failure_messages(run)};

    auto result = run_harness(harness, workdir);
    if (auto* failed = std::get_if<TestsFailed>(&result)) return *failed;
    return std::get<Passed>(result);
}

}  // namespace optloop
