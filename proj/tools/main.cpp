#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "optloop/config.hpp"
#include "optloop/llm.hpp"
#include "optloop/optreport.hpp"
#include "optloop/orchestrator.hpp"
#include "optloop/reporting.hpp"
#include "optloop/source.hpp"
#include "optloop/subprocess.hpp"

namespace fs = std::filesystem;
using namespace optloop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBaseline = 3;
constexpr int kExitProvider = 4;
constexpr int kExitIo = 5;

struct RunOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<int> iterations;
    std::optional<int> runs;
    std::optional<std::string> provider;
    std::optional<std::string> replay;
    int jobs = 1;
};

void apply_overrides(Config& config, const RunOptions& opts) {
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    if (opts.iterations) config.loop.iterations = *opts.iterations;
    if (opts.runs) config.loop.runs = *opts.runs;
    if (opts.provider) {
        auto kind = provider_kind_from(*opts.provider);
        if (!kind) {
            throw ValidationError(
                {"--provider: expected openai_compatible, anthropic_compatible, or replay"});
        }
        config.provider.kind = *kind;
    }
    if (opts.replay) {
        config.provider.kind = ProviderKind::replay;
        config.provider.replay_file = *opts.replay;
    }
    // Overrides may invalidate the config; re-check everything.
    finalize_config(config, "");
}

int cmd_run(const RunOptions& opts) {
    Config config = load_config(opts.config_path);
    apply_overrides(config, opts);

    // Constructing a client validates provider prerequisites (API key in the
    // environment, readable replay script) before any compilation.
    { Client probe(config.provider); }

    long long baseline = establish_baseline(config);
    std::printf("baseline: %lld ms\n", baseline);

    const int total_runs = config.loop.runs;
    const int jobs = std::max(1, std::min(opts.jobs, total_runs));
    const bool concurrent = jobs > 1;
    std::vector<std::optional<RunRecord>> records(static_cast<std::size_t>(total_runs));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(total_runs));

    if (jobs == 1) {
        for (int r = 1; r <= total_runs; ++r) {
            Client client(config.provider);
            RunRecord rec = run_once(config, r, baseline, client, concurrent);
            std::printf("run %d: best %lld ms (%s)\n", r, rec.best_score_ms,
                        rec.best_index == 0
                            ? "baseline"
                            : ("iteration " + std::to_string(rec.best_index)).c_str());
            records[static_cast<std::size_t>(r - 1)] = std::move(rec);
        }
    } else {
        std::atomic<int> next{1};
        auto worker = [&] {
            for (;;) {
                int r = next.fetch_add(1);
                if (r > total_runs) return;
                try {
                    Client client(config.provider);
                    records[static_cast<std::size_t>(r - 1)] =
                        run_once(config, r, baseline, client, concurrent);
                } catch (...) {
                    failures[static_cast<std::size_t>(r - 1)] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    std::vector<RunRecord> runs;
    runs.reserve(records.size());
    for (auto& rec : records) runs.push_back(std::move(*rec));
    RunSummary summary = aggregate(runs);
    write_summary(summary, runs, config.out_dir);
    std::printf("max %.1f | avg %.2f | improved %d of %d\n", summary.max_speedup,
                summary.avg_speedup, summary.num_improved, total_runs);
    std::printf("summary: %s\n", (fs::path(config.out_dir) / "summary.md").string().c_str());
    return kExitOk;
}

int cmd_parse_report(const std::string& input, const std::string& dialect_name) {
    if (!fs::exists(input)) throw FileNotFound(input);
    ReportDialect dialect =
        dialect_name == "gcc" ? ReportDialect::gcc_optinfo : ReportDialect::clang_rpass;
    FileText file = read_text_file(input);
    ParsedReport report = parse_report(file.text, dialect);
    for (const auto& diag : report.diagnostics) {
        std::printf("%s\n", render_diagnostic(diag).c_str());
    }
    std::printf("parsed %zu diagnostics, discarded %d lines\n", report.diagnostics.size(),
                report.discarded_lines);
    return kExitOk;
}

int cmd_render_prompt(const std::string& config_path, const std::string& kind_name,
                      const std::optional<std::string>& code,
                      const std::optional<std::string>& report,
                      const std::optional<long long>& score) {
    Config config = load_config(config_path);

    PromptContext ctx;
    ctx.compilerfamily = compiler_family_name(config.compiler.family);
    if (code) {
        ctx.code = *code;
    } else {
        FileText file = read_text_file(config.target.source_path);
        SourceVersion version = make_source_version(file.text, config.target.region);
        ctx.code = version.snippet;
    }
    ctx.report = report;
    ctx.scoreint = score;

    const std::map<std::string, const PromptTemplate*> kinds = {
        {"context", &config.prompts.context},
        {"first", &config.prompts.first},
        {"success", &config.prompts.success},
        {"compile_error", &config.prompts.compile_error},
        {"test_failure", &config.prompts.test_failure}};
    auto found = kinds.find(kind_name);
    if (found == kinds.end()) {
        throw ValidationError(
            {"--kind: expected context, first, success, compile_error, or test_failure"});
    }
    std::string rendered = render_prompt(*found->second, ctx);
    std::fwrite(rendered.data(), 1, rendered.size(), stdout);
    if (rendered.empty() || rendered.back() != '\n') std::printf("\n");
    return kExitOk;
}

int cmd_summarize(const std::string& out_dir) {
    std::vector<std::pair<int, std::string>> record_paths;
    if (fs::is_directory(out_dir)) {
        for (const auto& entry : fs::directory_iterator(out_dir)) {
            if (!entry.is_directory()) continue;
            std::string name = entry.path().filename().string();
            if (name.rfind("run", 0) != 0) continue;
            std::string digits = name.substr(3);
            if (digits.empty() ||
                digits.find_first_not_of("0123456789") != std::string::npos) {
                continue;
            }
            fs::path record = entry.path() / "record.json";
            if (fs::exists(record)) {
                record_paths.emplace_back(std::stoi(digits), record.string());
            }
        }
    }
    if (record_paths.empty()) {
        throw ValidationError({"no run*/record.json files under " + out_dir});
    }
    std::sort(record_paths.begin(), record_paths.end());
    std::vector<RunRecord> runs;
    for (const auto& [index, path] : record_paths) runs.push_back(read_run_record(path));
    RunSummary summary = aggregate(runs);
    write_summary(summary, runs, out_dir);
    std::printf("max %.1f | avg %.2f | improved %d of %zu\n", summary.max_speedup,
                summary.avg_speedup, summary.num_improved, runs.size());
    return kExitOk;
}

// Every failure class maps to exactly one exit code.
int classify_failure(const std::exception_ptr& eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const FileNotFound&) {
        return kExitConfig;
    } catch (const ParseError&) {
        return kExitConfig;
    } catch (const ValidationError&) {
        return kExitConfig;
    } catch (const UnknownPlaceholder&) {
        return kExitConfig;
    } catch (const MissingVariable&) {
        return kExitConfig;
    } catch (const BaselineCompileFailed&) {
        return kExitBaseline;
    } catch (const BaselineTestsFailed&) {
        return kExitBaseline;
    } catch (const AuthError&) {
        return kExitProvider;
    } catch (const RateLimited&) {
        return kExitProvider;
    } catch (const TransportError&) {
        return kExitProvider;
    } catch (const MalformedResponse&) {
        return kExitProvider;
    } catch (const ReplayExhausted&) {
        return kExitProvider;
    } catch (const std::exception&) {
        return kExitIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    install_signal_forwarding();

    CLI::App app{"Drive a compiler-report-guided LLM rewrite loop over a source region"};
    app.require_subcommand(1);

    RunOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "Execute the full optimization loop");
    run->add_option("--config", run_opts.config_path, "Configuration file")->required();
    run->add_option("--out", run_opts.out_dir, "Output directory (overrides out_dir)");
    run->add_option("--iterations", run_opts.iterations, "Iterations per run");
    run->add_option("--runs", run_opts.runs, "Number of independent runs");
    run->add_option("--provider", run_opts.provider,
                    "Provider kind: openai_compatible|anthropic_compatible|replay");
    run->add_option("--replay", run_opts.replay,
                    "Replay script; implies the replay provider");
    run->add_option("--jobs", run_opts.jobs, "Concurrent runs (timing noise warning)")
        ->check(CLI::PositiveNumber);

    std::string parse_input;
    std::string parse_dialect = "clang";
    CLI::App* parse = app.add_subcommand("parse-report", "Parse a saved optimization report");
    parse->add_option("input", parse_input, "Report text file")->required();
    parse->add_option("--dialect", parse_dialect, "Report dialect")
        ->check(CLI::IsMember({"clang", "gcc"}));

    std::string render_config;
    std::string render_kind;
    std::optional<std::string> render_code;
    std::optional<std::string> render_report;
    std::optional<long long> render_score;
    CLI::App* render = app.add_subcommand("render-prompt", "Render one prompt template");
    render->add_option("--config", render_config, "Configuration file")->required();
    render->add_option("--kind", render_kind, "Template to render")->required();
    render->add_option("--code", render_code, "Value for {code}; defaults to the target snippet");
    render->add_option("--report", render_report, "Value for {report}");
    render->add_option("--score", render_score, "Value for {scoreint}");

    std::string summarize_out;
    CLI::App* summarize =
        app.add_subcommand("summarize", "Rebuild summaries from recorded runs");
    summarize->add_option("--out", summarize_out, "Directory holding run*/record.json")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (parse->parsed()) return cmd_parse_report(parse_input, parse_dialect);
        if (render->parsed()) {
            return cmd_render_prompt(render_config, render_kind, render_code, render_report,
                                     render_score);
        }
        return cmd_summarize(summarize_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return classify_failure(std::current_exception());
    }
}
