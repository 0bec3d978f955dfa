#include "optloop/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace optloop {
namespace {

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string iteration_token(const IterationRecord& it) {
    std::string token = prompt_kind_name(it.prompt_kind) + ":";
    if (!it.eval) return token + "no_code";
    token += eval_outcome_name(*it.eval);
    if (const auto* p = std::get_if<Passed>(&*it.eval)) {
        token += "(" + std::to_string(p->score_ms) + " ms)";
    }
    return token;
}

json summary_to_json(const RunSummary& summary, const std::vector<RunRecord>& runs) {
    json j;
    j["max_speedup"] = summary.max_speedup;
    j["avg_speedup"] = summary.avg_speedup;
    j["num_improved"] = summary.num_improved;
    json jruns = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunRecord& run = runs[i];
        const RunSpeedup& sp = summary.per_run[i];
        json jr;
        jr["run_index"] = run.run_index;
        jr["baseline_ms"] = run.baseline_score_ms;
        jr["best_ms"] = select_best(run).score_ms;
        jr["speedup"] = sp.speedup;
        jr["improved"] = sp.improved;
        jr["cost_usd"] = run.total_cost_usd;
        json jits = json::array();
        for (const auto& it : run.iterations) {
            json ji;
            ji["index"] = it.index;
            ji["prompt_kind"] = prompt_kind_name(it.prompt_kind);
            ji["outcome"] = it.eval ? eval_outcome_name(*it.eval) : "no_code";
            if (it.eval) {
                if (const auto* p = std::get_if<Passed>(&*it.eval)) ji["score_ms"] = p->score_ms;
            }
            jits.push_back(std::move(ji));
        }
        jr["iterations"] = std::move(jits);
        jruns.push_back(std::move(jr));
    }
    j["runs"] = std::move(jruns);
    return j;
}

std::string summary_markdown(const RunSummary& summary, const std::vector<RunRecord>& runs) {
    std::string md = "# Speedup summary\n\n";
    md += "| Max | Avg | Num |\n";
    md += "| --- | --- | --- |\n";
    md += "| " + format_fixed(summary.max_speedup, 1) + " | " +
          format_fixed(summary.avg_speedup, 2) + " | " + std::to_string(summary.num_improved) +
          " |\n\n";
    md += "Total cost: " + format_fixed(summary.total_cost_usd, 4) + " USD over " +
          std::to_string(runs.size()) + (runs.size() == 1 ? " run" : " runs") + ".\n";
    if (std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.concurrent; })) {
        md += "\nWarning: some runs executed concurrently; timing scores may be noisy.\n";
    }
    md += "\n## Runs\n\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunRecord& run = runs[i];
        const RunSpeedup& sp = summary.per_run[i];
        BestPick best = select_best(run);
        md += "- run " + std::to_string(run.run_index) + ": baseline " +
              std::to_string(run.baseline_score_ms) + " ms, best " +
              std::to_string(best.score_ms) + " ms (" +
              (best.iteration_index == 0
                   ? std::string("baseline")
                   : "iteration " + std::to_string(best.iteration_index)) +
              "), speedup " + format_fixed(sp.speedup, 2) + ";";
        for (const auto& it : run.iterations) md += " " + iteration_token(it);
        md += "\n";
    }
    return md;
}

}  // namespace

double speedup(long long baseline_ms, long long best_ms) {
    if (best_ms == 0) throw ZeroScore();
    return static_cast<double>(baseline_ms) / static_cast<double>(best_ms);
}

RunSummary aggregate(const std::vector<RunRecord>& runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate requires at least one run");
    RunSummary summary;
    double sum = 0.0;
    for (const RunRecord& run : runs) {
        BestPick best = select_best(run);
        double ratio = speedup(run.baseline_score_ms, best.score_ms);
        if (ratio < 1.0) {
            throw std::logic_error(
                "internal error: speedup below 1.0; select_best violated its contract");
        }
        RunSpeedup sp;
        sp.run_index = run.run_index;
        sp.speedup = ratio;
        sp.improved = best.score_ms < run.baseline_score_ms;
        summary.per_run.push_back(sp);
        sum += ratio;
        summary.total_cost_usd += run.total_cost_usd;
        if (sp.improved) ++summary.num_improved;
    }
    summary.max_speedup =
        std::max_element(summary.per_run.begin(), summary.per_run.end(),
                         [](const RunSpeedup& a, const RunSpeedup& b) {
                             return a.speedup < b.speedup;
                         })
            ->speedup;
    summary.avg_speedup = sum / static_cast<double>(runs.size());
    return summary;
}

void write_summary(const RunSummary& summary, const std::vector<RunRecord>& runs,
                   const std::string& out_dir) {
    if (summary.per_run.size() != runs.size()) {
        throw std::invalid_argument("summary does not match the run list");
    }
    fs::create_directories(out_dir);
    json j = summary_to_json(summary, runs);
    write_text_file((fs::path(out_dir) / "summary.json").string(), j.dump(2) + "\n");
    write_text_file((fs::path(out_dir) / "summary.md").string(),
                    summary_markdown(summary, runs));
}

}  // namespace optloop
