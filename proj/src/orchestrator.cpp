#include "optloop/orchestrator.hpp"

#include <chrono>
#include <filesystem>
#include <utility>

#include <json.hpp>

#include "optloop/optreport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace optloop {
namespace {

std::string basename_of(const std::string& path) {
    std::size_t slash = path.rfind('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

// Extension including the dot, empty when there is none.
std::string extension_of(const std::string& path) {
    std::string base = basename_of(path);
    std::size_t dot = base.rfind('.');
    return dot == std::string::npos || dot == 0 ? std::string() : base.substr(dot);
}

// Keeps the END of long output; the decisive error usually concludes it.
std::string tail_truncate(const std::string& text, int budget) {
    std::size_t limit = budget > 0 ? static_cast<std::size_t>(budget) : 0;
    if (text.size() <= limit) return text;
    return text.substr(text.size() - limit);
}

std::string eval_text(const EvalResult& eval) {
    std::string out = "outcome: " + eval_outcome_name(eval) + "\n";
    if (const auto* p = std::get_if<Passed>(&eval)) {
        out += "score_ms: " + std::to_string(p->score_ms) + "\n";
        return out;
    }
    const std::string& messages = std::holds_alternative<CompileFailed>(eval)
                                      ? std::get<CompileFailed>(eval).messages
                                      : std::get<TestsFailed>(eval).messages;
    out += "\n" + messages;
    if (out.back() != '\n') out += '\n';
    return out;
}

void write_conversation(const Conversation& conv, const std::string& path) {
    std::string out;
    for (const auto& m : conv.messages()) {
        out += "## " + role_name(m.role) + "\n\n";
        out += m.content;
        if (out.back() != '\n') out += '\n';
        out += '\n';
    }
    write_text_file(path, out);
}

json iteration_to_json(const IterationRecord& it) {
    json j;
    j["index"] = it.index;
    j["prompt_kind"] = prompt_kind_name(it.prompt_kind);
    j["prompt_text"] = it.prompt_text;
    j["response_text"] = it.response_text;
    j["extracted_code"] = it.extracted_code ? json(*it.extracted_code) : json(nullptr);
    if (it.eval) {
        json je;
        je["outcome"] = eval_outcome_name(*it.eval);
        if (const auto* p = std::get_if<Passed>(&*it.eval)) {
            je["score_ms"] = p->score_ms;
        } else if (const auto* c = std::get_if<CompileFailed>(&*it.eval)) {
            je["messages"] = c->messages;
        } else {
            je["messages"] = std::get<TestsFailed>(*it.eval).messages;
        }
        j["eval"] = std::move(je);
    } else {
        j["eval"] = nullptr;
    }
    j["report_packed"] = it.report_packed ? json(*it.report_packed) : json(nullptr);
    j["usage"] = {{"input_tokens", it.usage.input_tokens},
                  {"output_tokens", it.usage.output_tokens}};
    return j;
}

IterationRecord iteration_from_json(const json& j) {
    IterationRecord it;
    it.index = j.at("index").get<int>();
    auto kind = prompt_kind_from(j.at("prompt_kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown prompt kind in record");
    it.prompt_kind = *kind;
    it.prompt_text = j.at("prompt_text").get<std::string>();
    it.response_text = j.at("response_text").get<std::string>();
    if (j.contains("extracted_code") && !j.at("extracted_code").is_null()) {
        it.extracted_code = j.at("extracted_code").get<std::string>();
    }
    if (j.contains("eval") && !j.at("eval").is_null()) {
        const json& je = j.at("eval");
        std::string outcome = je.at("outcome").get<std::string>();
        if (outcome == "passed") {
            it.eval = Passed{je.at("score_ms").get<long long>()};
        } else if (outcome == "compile_failed") {
            it.eval = CompileFailed{je.at("messages").get<std::string>()};
        } else if (outcome == "tests_failed") {
            it.eval = TestsFailed{je.at("messages").get<std::string>()};
        } else {
            throw std::runtime_error("unknown eval outcome in record: " + outcome);
        }
    }
    if (j.contains("report_packed") && !j.at("report_packed").is_null()) {
        it.report_packed = j.at("report_packed").get<std::string>();
    }
    if (j.contains("usage")) {
        it.usage.input_tokens = j.at("usage").value("input_tokens", 0LL);
        it.usage.output_tokens = j.at("usage").value("output_tokens", 0LL);
    }
    return it;
}

}  // namespace

std::string prompt_kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::first: return "first";
        case PromptKind::success: return "success";
        case PromptKind::compile_error: return "compile_error";
        case PromptKind::test_failure: return "test_failure";
        case PromptKind::missing_code: return "missing_code";
    }
    return "first";
}

std::optional<PromptKind> prompt_kind_from(const std::string& name) {
    if (name == "first") return PromptKind::first;
    if (name == "success") return PromptKind::success;
    if (name == "compile_error") return PromptKind::compile_error;
    if (name == "test_failure") return PromptKind::test_failure;
    if (name == "missing_code") return PromptKind::missing_code;
    return std::nullopt;
}

long long establish_baseline(const Config& config) {
    fs::path workdir = fs::path(config.out_dir) / "baseline" / "work";
    fs::create_directories(workdir);
    FileText original = read_text_file(config.target.source_path);
    make_source_version(original.text, config.target.region);  // region must locate
    std::string work_file = (workdir / basename_of(config.target.source_path)).string();
    write_text_file(work_file, original.text, original.crlf);
    EvalResult result =
        evaluate_candidate(config.compiler, config.harness, work_file, workdir.string());
    if (const auto* c = std::get_if<CompileFailed>(&result)) {
        throw BaselineCompileFailed(c->messages);
    }
    if (const auto* t = std::get_if<TestsFailed>(&result)) {
        throw BaselineTestsFailed(t->messages);
    }
    return std::get<Passed>(result).score_ms;
}

PromptKind choose_prompt(const std::optional<EvalResult>& prev_eval, bool prev_code_extracted,
                         int iteration_index, MissingCodePolicy policy) {
    if (iteration_index == 1) return PromptKind::first;
    if (!prev_code_extracted && policy == MissingCodePolicy::reprompt) {
        return PromptKind::missing_code;
    }
    if (!prev_eval || std::holds_alternative<Passed>(*prev_eval)) return PromptKind::success;
    if (std::holds_alternative<CompileFailed>(*prev_eval)) return PromptKind::compile_error;
    return PromptKind::test_failure;
}

BuiltPrompt build_prompt(PromptKind kind, const Config& config, const PromptInputs& inputs) {
    PromptContext ctx;
    ctx.compilerfamily = compiler_family_name(config.compiler.family);
    ctx.code = inputs.last_good->snippet;
    ctx.scoreint = inputs.latest_passing_score;

    BuiltPrompt built;
    switch (kind) {
        case PromptKind::first:
        case PromptKind::success: {
            CompilerRun run =
                run_compiler(config.compiler, inputs.work_file, CompileMode::report,
                             inputs.workdir);
            std::string text = run.err;
            if (!text.empty() && text.back() != '\n') text += '\n';
            text += run.out;
            ParsedReport parsed = parse_report(text, dialect_for(config.compiler.family));
            auto kept = filter_by_region(parsed.diagnostics, inputs.last_good->region_lines,
                                         basename_of(config.target.source_path));
            std::string packed = pack_report(kept, config.loop.report_char_budget);
            ctx.report = packed;
            built.report_packed = std::move(packed);
            const PromptTemplate& tmpl =
                kind == PromptKind::first ? config.prompts.first : config.prompts.success;
            built.text = render_prompt(tmpl, ctx);
            return built;
        }
        case PromptKind::compile_error:
        case PromptKind::test_failure: {
            ctx.report = tail_truncate(inputs.failure_messages, config.loop.report_char_budget);
            const PromptTemplate& tmpl = kind == PromptKind::compile_error
                                             ? config.prompts.compile_error
                                             : config.prompts.test_failure;
            built.text = render_prompt(tmpl, ctx);
            return built;
        }
        case PromptKind::missing_code: {
            // Repeat the latest known context rather than regenerating a
            // report; the previous response changed nothing on disk.
            ctx.report = inputs.cached_report;
            built.text =
                std::string(kMissingCodeSentence) + "\n" + render_prompt(config.prompts.success, ctx);
            return built;
        }
    }
    return built;
}

BestPick select_best(const RunRecord& run) {
    BestPick best{0, run.baseline_score_ms};
    for (const auto& it : run.iterations) {
        if (!it.eval) continue;
        if (const auto* p = std::get_if<Passed>(&*it.eval)) {
            if (p->score_ms < best.score_ms) best = {it.index, p->score_ms};
        }
    }
    return best;
}

RunRecord run_once(const Config& config, int run_index, long long baseline_score_ms,
                   Client& client, bool concurrent) {
    auto start = std::chrono::steady_clock::now();
    fs::path run_dir = fs::path(config.out_dir) / ("run" + std::to_string(run_index));
    fs::path workdir = run_dir / "work";
    fs::create_directories(workdir);

    FileText original = read_text_file(config.target.source_path);
    SourceVersion last_good = make_source_version(original.text, config.target.region);
    const std::string target_name = basename_of(config.target.source_path);
    const std::string ext = extension_of(config.target.source_path);
    const std::string work_file = (workdir / target_name).string();
    write_text_file(work_file, last_good.full_text, original.crlf);

    RunRecord rec;
    rec.run_index = run_index;
    rec.baseline_score_ms = baseline_score_ms;
    rec.concurrent = concurrent;

    Conversation conv;
    {
        PromptContext system_ctx;
        system_ctx.compilerfamily = compiler_family_name(config.compiler.family);
        std::string system_text = render_prompt(config.prompts.context, system_ctx);
        if (!system_text.empty()) conv.set_system(std::move(system_text));
    }

    std::optional<EvalResult> last_eval;
    bool prev_extracted = true;
    long long latest_score = baseline_score_ms;
    std::string cached_report;
    std::string failure_messages;

    for (int index = 1; index <= config.loop.iterations; ++index) {
        PromptKind kind =
            choose_prompt(last_eval, prev_extracted, index, config.loop.on_missing_code_block);

        PromptInputs inputs;
        inputs.last_good = &last_good;
        inputs.latest_passing_score = latest_score;
        inputs.failure_messages = failure_messages;
        inputs.cached_report = cached_report;
        inputs.work_file = work_file;
        inputs.workdir = workdir.string();
        BuiltPrompt prompt = build_prompt(kind, config, inputs);
        if (prompt.report_packed) cached_report = *prompt.report_packed;

        IterationRecord it;
        it.index = index;
        it.prompt_kind = kind;
        it.prompt_text = prompt.text;
        it.report_packed = prompt.report_packed;

        conv.push_user(prompt.text);
        Completion completion = client.complete(conv);
        conv.push_assistant(completion.message.content);
        it.response_text = completion.message.content;
        it.usage = completion.usage;
        rec.total_cost_usd += cost_usd(completion.usage, client.spec());

        fs::path iter_dir = run_dir / ("iter" + std::to_string(index));
        fs::create_directories(iter_dir);
        write_text_file((iter_dir / "prompt.md").string(), it.prompt_text);
        write_text_file((iter_dir / "response.md").string(), it.response_text);

        // A whitespace-only block would silently delete the region, so it
        // counts as missing.
        auto code = extract_code_block(it.response_text);
        bool usable =
            code.has_value() && code->find_first_not_of(" \t\r\n") != std::string::npos;
        if (!usable) {
            prev_extracted = false;
            rec.iterations.push_back(std::move(it));
            continue;
        }
        prev_extracted = true;
        it.extracted_code = code;

        SourceVersion candidate = splice_snippet(last_good, *code);
        candidate.iteration_index = index;
        write_text_file(work_file, candidate.full_text, original.crlf);
        write_text_file((iter_dir / ("source" + ext)).string(), candidate.full_text,
                        original.crlf);

        EvalResult eval =
            evaluate_candidate(config.compiler, config.harness, work_file, workdir.string());
        it.eval = eval;
        last_eval = eval;
        write_text_file((iter_dir / "eval.txt").string(), eval_text(eval));

        if (const auto* passed = std::get_if<Passed>(&eval)) {
            last_good = std::move(candidate);
            latest_score = passed->score_ms;
            failure_messages.clear();
        } else {
            failure_messages = std::holds_alternative<CompileFailed>(eval)
                                   ? std::get<CompileFailed>(eval).messages
                                   : std::get<TestsFailed>(eval).messages;
            // Keep the on-disk copy buildable for report regeneration.
            write_text_file(work_file, last_good.full_text, original.crlf);
        }
        rec.iterations.push_back(std::move(it));
    }

    BestPick best = select_best(rec);
    rec.best_index = best.iteration_index;
    rec.best_score_ms = best.score_ms;
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_conversation(conv, (run_dir / "conversation.md").string());
    write_run_record(rec, (run_dir / "record.json").string());
    return rec;
}

void write_run_record(const RunRecord& rec, const std::string& path) {
    json j;
    j["run_index"] = rec.run_index;
    j["baseline_score_ms"] = rec.baseline_score_ms;
    j["best_index"] = rec.best_index;
    j["best_score_ms"] = rec.best_score_ms;
    j["total_cost_usd"] = rec.total_cost_usd;
    j["wall_time_seconds"] = rec.wall_time_seconds;
    j["concurrent"] = rec.concurrent;
    json iterations = json::array();
    for (const auto& it : rec.iterations) iterations.push_back(iteration_to_json(it));
    j["iterations"] = std::move(iterations);
    write_text_file(path, j.dump(2) + "\n");
}

RunRecord read_run_record(const std::string& path) {
    FileText file = read_text_file(path);
    json j = json::parse(file.text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw std::runtime_error("malformed run record: " + path);
    }
    try {
        RunRecord rec;
        rec.run_index = j.at("run_index").get<int>();
        rec.baseline_score_ms = j.at("baseline_score_ms").get<long long>();
        rec.best_index = j.at("best_index").get<int>();
        rec.best_score_ms = j.at("best_score_ms").get<long long>();
        rec.total_cost_usd = j.value("total_cost_usd", 0.0);
        rec.wall_time_seconds = j.value("wall_time_seconds", 0.0);
        rec.concurrent = j.value("concurrent", false);
        for (const auto& ji : j.at("iterations")) {
            rec.iterations.push_back(iteration_from_json(ji));
        }
        return rec;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed run record: " + path + " (" + e.what() + ")");
    }
}

}  // namespace optloop
