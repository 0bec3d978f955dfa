#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "optloop/reporting.hpp"

#include "helpers.hpp"

using namespace optloop;
using nlohmann::json;

namespace {

RunRecord make_run(int index, long long baseline,
                   const std::vector<std::pair<int, long long>>& passes) {
    RunRecord run;
    run.run_index = index;
    run.baseline_score_ms = baseline;
    for (const auto& [iter_index, score] : passes) {
        IterationRecord it;
        it.index = iter_index;
        it.prompt_kind = iter_index == 1 ? PromptKind::first : PromptKind::success;
        it.eval = Passed{score};
        run.iterations.push_back(std::move(it));
    }
    BestPick best = select_best(run);
    run.best_index = best.iteration_index;
    run.best_score_ms = best.score_ms;
    return run;
}

}  // namespace

TEST_CASE("speedup is baseline over best") {
    CHECK(speedup(100, 80) == doctest::Approx(1.25));
    CHECK(speedup(100, 100) == doctest::Approx(1.0));
    CHECK(speedup(0, 5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(speedup(100, 0), ZeroScore);
}

TEST_CASE("aggregate reproduces the headline shape") {
    std::vector<RunRecord> runs = {
        make_run(1, 140, {{1, 100}}),
        make_run(2, 100, {}),
        make_run(3, 100, {{1, 100}}),
        make_run(4, 100, {}),
        make_run(5, 100, {}),
    };
    RunSummary summary = aggregate(runs);
    CHECK(summary.max_speedup == doctest::Approx(1.4));
    CHECK(summary.avg_speedup == doctest::Approx(1.08).epsilon(0.005));
    CHECK(summary.num_improved == 1);
    REQUIRE(summary.per_run.size() == 5);
    CHECK(summary.per_run[0].improved);
    // A run matching its baseline exactly is not an improvement.
    CHECK(!summary.per_run[2].improved);

    // Order of runs cannot change the aggregate numbers.
    std::vector<RunRecord> shuffled = {runs[3], runs[0], runs[4], runs[2], runs[1]};
    RunSummary again = aggregate(shuffled);
    CHECK(again.max_speedup == doctest::Approx(summary.max_speedup));
    CHECK(again.avg_speedup == doctest::Approx(summary.avg_speedup));
    CHECK(again.num_improved == summary.num_improved);
}

TEST_CASE("aggregate of non-improving runs is exactly flat") {
    std::vector<RunRecord> runs;
    for (int i = 1; i <= 5; ++i) runs.push_back(make_run(i, 100, {}));
    RunSummary summary = aggregate(runs);
    CHECK(summary.max_speedup == doctest::Approx(1.0));
    CHECK(summary.avg_speedup == doctest::Approx(1.0));
    CHECK(summary.num_improved == 0);
}

TEST_CASE("aggregate recomputes the best instead of trusting stored fields") {
    RunRecord run = make_run(1, 100, {{2, 50}});
    run.best_index = 0;  // stale, as if written by an older tool
    run.best_score_ms = 100;
    RunSummary summary = aggregate({run});
    CHECK(summary.max_speedup == doctest::Approx(2.0));
    CHECK(summary.num_improved == 1);
}

TEST_CASE("aggregate failure modes") {
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
    RunRecord zero = make_run(1, 100, {{1, 0}});
    CHECK_THROWS_AS(aggregate({zero}), ZeroScore);
}

TEST_CASE("aggregate sums costs across runs") {
    RunRecord a = make_run(1, 100, {});
    a.total_cost_usd = 0.05;
    RunRecord b = make_run(2, 100, {});
    b.total_cost_usd = 0.075;
    CHECK(aggregate({a, b}).total_cost_usd == doctest::Approx(0.125));
}

TEST_CASE("write_summary emits the table, cost line, and run histories") {
    testutil::TempDir dir;
    std::vector<RunRecord> runs = {
        make_run(1, 140, {{1, 100}}),
        make_run(2, 100, {}),
        make_run(3, 100, {{1, 100}}),
        make_run(4, 100, {}),
        make_run(5, 100, {}),
    };
    runs[0].total_cost_usd = 0.125;
    {
        IterationRecord no_code;
        no_code.index = 2;
        no_code.prompt_kind = PromptKind::success;
        runs[0].iterations.push_back(no_code);
        IterationRecord failed;
        failed.index = 3;
        failed.prompt_kind = PromptKind::test_failure;
        failed.eval = TestsFailed{"wrong"};
        runs[0].iterations.push_back(failed);
    }
    RunSummary summary = aggregate(runs);
    write_summary(summary, runs, dir.str());

    std::string md = testutil::read_file(dir.file("summary.md"));
    CHECK(md.find("# Speedup summary") == 0);
    CHECK(md.find("| Max | Avg | Num |\n") != std::string::npos);
    CHECK(md.find("| 1.4 | 1.08 | 1 |\n") != std::string::npos);
    CHECK(md.find("Total cost: 0.1250 USD over 5 runs.\n") != std::string::npos);
    CHECK(md.find("## Runs\n") != std::string::npos);
    CHECK(md.find("- run 1: baseline 140 ms, best 100 ms (iteration 1), speedup 1.40; "
                  "first:passed(100 ms) success:no_code test_failure:tests_failed\n") !=
          std::string::npos);
    CHECK(md.find("- run 2: baseline 100 ms, best 100 ms (baseline), speedup 1.00;\n") !=
          std::string::npos);
    CHECK(md.find("concurrently") == std::string::npos);

    json j = json::parse(testutil::read_file(dir.file("summary.json")));
    CHECK(j["max_speedup"].get<double>() == doctest::Approx(1.4));
    CHECK(j["avg_speedup"].get<double>() == doctest::Approx(1.08).epsilon(0.005));
    CHECK(j["num_improved"] == 1);
    CHECK(!j.contains("total_cost_usd"));  // per-run costs only
    REQUIRE(j["runs"].size() == 5);
    CHECK(j["runs"][0]["baseline_ms"] == 140);
    CHECK(j["runs"][0]["best_ms"] == 100);
    CHECK(j["runs"][0]["improved"] == true);
    CHECK(j["runs"][0]["cost_usd"].get<double>() == doctest::Approx(0.125));
    REQUIRE(j["runs"][0]["iterations"].size() == 3);
    CHECK(j["runs"][0]["iterations"][0]["outcome"] == "passed");
    CHECK(j["runs"][0]["iterations"][0]["score_ms"] == 100);
    CHECK(j["runs"][0]["iterations"][1]["outcome"] == "no_code");
    CHECK(j["runs"][0]["iterations"][2]["outcome"] == "tests_failed");
}

TEST_CASE("write_summary flags concurrent timing and singular runs") {
    testutil::TempDir dir;
    RunRecord run = make_run(1, 100, {});
    run.concurrent = true;
    RunSummary summary = aggregate({run});
    write_summary(summary, {run}, dir.str());
    std::string md = testutil::read_file(dir.file("summary.md"));
    CHECK(md.find("Warning: some runs executed concurrently; timing scores may be noisy.") !=
          std::string::npos);
    CHECK(md.find("over 1 run.") != std::string::npos);
}

TEST_CASE("write_summary rejects a summary that does not match the runs") {
    testutil::TempDir dir;
    RunRecord run = make_run(1, 100, {});
    RunSummary summary = aggregate({run});
    CHECK_THROWS_AS(write_summary(summary, {run, run}, dir.str()), std::invalid_argument);
}
