#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "optloop/orchestrator.hpp"

namespace optloop {

struct RunSpeedup {
    int run_index = 1;
    double speedup = 1.0;  // baseline / best, ≥ 1.0 by construction
    bool improved = false;

    bool operator==(const RunSpeedup&) const = default;
};

struct RunSummary {
    std::vector<RunSpeedup> per_run;
    double max_speedup = 1.0;
    double avg_speedup = 1.0;
    int num_improved = 0;
    double total_cost_usd = 0.0;
};

struct ZeroScore : std::runtime_error {
    ZeroScore()
        : std::runtime_error("score of 0 ms cannot anchor a speedup; check the harness") {}
};

double speedup(long long baseline_ms, long long best_ms);

// Best-of-run speedups via select_best; non-improving runs enter the average
// at their actual ratio.
RunSummary aggregate(const std::vector<RunRecord>& runs);

// summary.json carries full precision; summary.md rounds Max to one decimal
// and Avg to two.
void write_summary(const RunSummary& summary, const std::vector<RunRecord>& runs,
                   const std::string& out_dir);

}  // namespace optloop
