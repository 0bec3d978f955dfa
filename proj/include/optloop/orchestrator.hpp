#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optloop/config.hpp"
#include "optloop/evaluator.hpp"
#include "optloop/llm.hpp"
#include "optloop/source.hpp"

namespace optloop {

enum class PromptKind { first, success, compile_error, test_failure, missing_code };

std::string prompt_kind_name(PromptKind kind);
std::optional<PromptKind> prompt_kind_from(const std::string& name);

struct IterationRecord {
    int index = 1;
    PromptKind prompt_kind = PromptKind::first;
    std::string prompt_text;
    std::string response_text;
    std::optional<std::string> extracted_code;
    std::optional<EvalResult> eval;  // present iff extracted_code present
    std::optional<std::string> report_packed;  // present for first/success kinds
    Usage usage;
};

struct RunRecord {
    int run_index = 1;
    long long baseline_score_ms = 0;
    std::vector<IterationRecord> iterations;
    int best_index = 0;  // 0 = baseline, otherwise an iteration index
    long long best_score_ms = 0;
    double total_cost_usd = 0.0;
    double wall_time_seconds = 0.0;
    bool concurrent = false;
};

struct BaselineCompileFailed : std::runtime_error {
    explicit BaselineCompileFailed(const std::string& messages)
        : std::runtime_error("baseline does not compile:\n" + messages), messages(messages) {}
    std::string messages;
};

struct BaselineTestsFailed : std::runtime_error {
    explicit BaselineTestsFailed(const std::string& messages)
        : std::runtime_error("baseline fails the harness:\n" + messages), messages(messages) {}
    std::string messages;
};

// Compiles and times the unmodified source in <out_dir>/baseline/work. Aborts
// before any model traffic when the starting point is broken.
long long establish_baseline(const Config& config);

// prev_eval is the last ACTUAL evaluation outcome, which may be several
// iterations old when responses carried no code.
PromptKind choose_prompt(const std::optional<EvalResult>& prev_eval, bool prev_code_extracted,
                         int iteration_index, MissingCodePolicy policy);

struct PromptInputs {
    const SourceVersion* last_good = nullptr;
    long long latest_passing_score = 0;
    std::string failure_messages;  // raw; tail-truncated to the report budget here
    std::string cached_report;     // packed report of the last first/success prompt
    std::string work_file;         // compilable copy of last_good, for report regeneration
    std::string workdir;
};

struct BuiltPrompt {
    std::string text;
    std::optional<std::string> report_packed;
};

// first/success regenerate a fresh report from last_good; failure kinds carry
// the captured messages instead and skip the compiler.
BuiltPrompt build_prompt(PromptKind kind, const Config& config, const PromptInputs& inputs);

struct BestPick {
    int iteration_index = 0;  // 0 = baseline
    long long score_ms = 0;
};

// Minimum over {baseline} ∪ passing iterations; ties go to the earliest.
BestPick select_best(const RunRecord& run);

// One full loop: up to loop.iterations of prompt → complete → extract →
// splice → evaluate. Candidate failures are data; only infrastructure
// failures throw. Artifacts land in <out_dir>/run<run_index>/.
RunRecord run_once(const Config& config, int run_index, long long baseline_score_ms,
                   Client& client, bool concurrent = false);

void write_run_record(const RunRecord& rec, const std::string& path);
RunRecord read_run_record(const std::string& path);

}  // namespace optloop
