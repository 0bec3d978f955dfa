#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "optloop/source.hpp"

namespace optloop {

enum class CompilerFamily { clang, gcc, other };

std::string compiler_family_name(CompilerFamily family);

// How to invoke the compiler for optimized builds, report generation, and
// syntax checks.
struct CompilerSpec {
    CompilerFamily family = CompilerFamily::clang;
    std::string command;
    std::vector<std::string> opt_flags;
    std::vector<std::string> report_flags;
    std::vector<std::string> syntax_check_flags;
    double timeout_seconds = 300.0;

    bool operator==(const CompilerSpec&) const = default;
};

enum class Severity { remark, missed, note, warning, error };

std::string severity_name(Severity s);

// One parsed compiler remark.
struct Diagnostic {
    std::string file;
    int line = 1;
    int column = 1;
    Severity severity = Severity::remark;
    std::optional<std::string> pass_name;
    std::string message;
    std::vector<std::string> context_lines;  // raw source-echo/caret lines
};

enum class ReportDialect { clang_rpass, gcc_optinfo };

ReportDialect dialect_for(CompilerFamily family);

struct CompilerRun {
    int exit_status = 0;
    std::string out;
    std::string err;
    std::vector<std::string> command_line;
};

enum class CompileMode { report, syntax_check };

struct Timeout : std::runtime_error {
    explicit Timeout(double limit_seconds)
        : std::runtime_error("compiler timed out after " + std::to_string(limit_seconds) +
                             " seconds"),
          limit(limit_seconds) {}
    double limit;
};

// Report mode appends report_flags to opt_flags and compiles to an object in
// workdir (no link); syntax_check mode uses syntax_check_flags only. Nonzero
// exit is data, not an error.
CompilerRun run_compiler(const CompilerSpec& spec, const std::string& source, CompileMode mode,
                         const std::string& workdir = {});

struct ParsedReport {
    std::vector<Diagnostic> diagnostics;
    int discarded_lines = 0;
};

// Total over arbitrary byte-clean text; unmatched lines are discarded but
// counted.
ParsedReport parse_report(std::string_view text, ReportDialect dialect);

// Keeps diagnostics whose file path-suffix-matches target_file and whose line
// lies inside the interval. Order preserved; lines are not remapped.
std::vector<Diagnostic> filter_by_region(const std::vector<Diagnostic>& diags,
                                         LineInterval region_lines,
                                         const std::string& target_file);

// One packed line: FILE:LINE:COL: SEVERITY: MESSAGE [PASS], without newline.
std::string render_diagnostic(const Diagnostic& diag);

// Emits the maximal prefix of diagnostics whose rendering (one line each,
// '\n'-terminated) fits the budget; appends "... (N more diagnostics omitted)"
// when any were dropped.
std::string pack_report(const std::vector<Diagnostic>& diags, int budget_chars);

}  // namespace optloop
