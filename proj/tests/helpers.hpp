#pragma once
// Shared test fixtures: scratch directories, stub compiler/harness scripts,
// a canned clang report, and a replay-driven loop scenario runner.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/stat.h>

#include "optloop/config.hpp"
#include "optloop/llm.hpp"
#include "optloop/orchestrator.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "optloop-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    fs::path file(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_script(const fs::path& p, const std::string& body) {
    write_file(p, body);
    if (::chmod(p.c_str(), 0755) != 0) throw std::runtime_error("chmod failed: " + p.string());
}

// Matmul kernel remarks captured from clang 18 (-Rpass-missed=. -O3
// -march=native): five diagnostics, three of which carry echo/caret context.
inline const char* sample_clang_report() {
    return
        "simplematrix.cc:19:18: remark: failed to move load with loop-invariant address "
        "because the loop may invalidate its value [-Rpass-missed=licm]\n"
        "   19 |         res(i,j) += lhs(i, k) * rhs(k, j);\n"
        "      |                  ^\n"
        "simplematrix.cc:19:18: remark: failed to hoist load with loop-invariant address "
        "because load is conditionally executed [-Rpass-missed=licm]\n"
        "simplematrix.cc:19:18: remark: failed to move load with loop-invariant address "
        "because the loop may invalidate its value [-Rpass-missed=licm]\n"
        "simplematrix.cc:18:7: remark: loop not vectorized [-Rpass-missed=loop-vectorize]\n"
        "   18 |       for (int k = 0; k < lhs.columns(); ++k)\n"
        "      |       ^\n"
        "simplematrix.cc:14:5: remark: 1 reloads 1.249999e+02 total reloads cost 4 folded "
        "reloads 8.124992e+02 total folded reloads cost 4 virtual registers copies "
        "5.312495e+02 total copies cost generated in loop [-Rpass-missed=regalloc]\n"
        "   14 |     for (int j = 0; j < res.columns(); ++j)\n"
        "      |     ^\n";
}

// Fake compiler. Fails any source containing XFAIL_COMPILE; with a
// -Rpass-missed flag it prints one remark anchored at line 3 of the source;
// always creates the object named by -o on success.
inline fs::path write_stub_compiler(const fs::path& dir) {
    fs::path script = dir / "stub_compiler.sh";
    write_script(script,
                 "#!/bin/sh\n"
                 "src=\"\"\n"
                 "obj=\"\"\n"
                 "report=0\n"
                 "expect_obj=0\n"
                 "for arg in \"$@\"; do\n"
                 "    if [ \"$expect_obj\" = 1 ]; then obj=\"$arg\"; expect_obj=0; continue; fi\n"
                 "    case \"$arg\" in\n"
                 "        -o) expect_obj=1 ;;\n"
                 "        -Rpass-missed=*|-fopt-info-missed*) report=1 ;;\n"
                 "        -*) ;;\n"
                 "        *) src=\"$arg\" ;;\n"
                 "    esac\n"
                 "done\n"
                 "if [ -n \"$src\" ] && grep -q XFAIL_COMPILE \"$src\" 2>/dev/null; then\n"
                 "    echo \"$src:1:1: error: forced compile failure\" >&2\n"
                 "    exit 1\n"
                 "fi\n"
                 "if [ \"$report\" = 1 ] && [ -n \"$src\" ]; then\n"
                 "    echo \"$src:3:5: remark: stub missed optimization [-Rpass-missed=licm]\" >&2\n"
                 "fi\n"
                 "[ -n \"$obj\" ] && : > \"$obj\"\n"
                 "exit 0\n");
    return script;
}

// Fake harness. Reacts to markers in ./<candidate> within the working
// directory: XTESTS_FAIL / XNO_SCORE / XEXIT_NONZERO / XSCORE=<n>.
inline fs::path write_stub_harness(const fs::path& dir, const std::string& candidate) {
    fs::path script = dir / "stub_harness.sh";
    write_script(script,
                 "#!/bin/sh\n"
                 "src=\"./" + candidate + "\"\n"
                 "if grep -q XTESTS_FAIL \"$src\" 2>/dev/null; then\n"
                 "    echo \"datatype too short; use SimpleMatrix::value_type\"\n"
                 "    exit 1\n"
                 "fi\n"
                 "if grep -q XNO_SCORE \"$src\" 2>/dev/null; then\n"
                 "    echo \"ran without a score\"\n"
                 "    exit 0\n"
                 "fi\n"
                 "if grep -q XEXIT_NONZERO \"$src\" 2>/dev/null; then\n"
                 "    echo \"SCORE: 50\"\n"
                 "    echo \"late failure after timing\"\n"
                 "    exit 1\n"
                 "fi\n"
                 "score=$(sed -n 's/.*XSCORE=\\([0-9][0-9]*\\).*/\\1/p' \"$src\" 2>/dev/null"
                 " | head -n 1)\n"
                 "[ -z \"$score\" ] && score=100\n"
                 "echo \"stub checks passed\"\n"
                 "echo \"SCORE: $score\"\n"
                 "exit 0\n");
    return script;
}

// Four-line target whose marker region is exactly line 3; the stub compiler
// anchors its remark there and the stub harness reads the XSCORE tag.
inline std::string stub_target_text(const std::string& region_line) {
    return "// tuning stub\n// OPT-BEGIN\n" + region_line + "\n// OPT-END\n";
}

inline std::string join_replay(const std::vector<std::string>& responses) {
    std::string script;
    for (const auto& r : responses) {
        if (!script.empty()) script += "\n---8<---\n";
        script += r;
    }
    script += "\n";
    return script;
}

inline std::string fenced(const std::string& code) { return "```cpp\n" + code + "\n```\n"; }

// A ready-to-run loop config over the stub scripts, rooted at base. The
// caller owns base for the config's lifetime.
inline optloop::Config stub_loop_config(const fs::path& base, const std::string& out_dir,
                                        const std::vector<std::string>& responses,
                                        int iterations,
                                        optloop::MissingCodePolicy policy =
                                            optloop::MissingCodePolicy::fail_iteration) {
    fs::create_directories(base);
    fs::path compiler = write_stub_compiler(base);
    fs::path harness = write_stub_harness(base, "target.cc");
    write_file(base / "target.cc",
               stub_target_text("int kernel() { return 1; }  // XSCORE=100"));
    write_file(base / "replay.txt", join_replay(responses));

    optloop::Config config;
    config.compiler.family = optloop::CompilerFamily::clang;
    config.compiler.command = compiler.string();
    config.compiler.opt_flags = {"-O2"};
    config.target.source_path = (base / "target.cc").string();
    config.target.region.mode = optloop::RegionMode::markers;
    config.target.region.begin_marker = "// OPT-BEGIN";
    config.target.region.end_marker = "// OPT-END";
    config.harness.command = {harness.string()};
    config.harness.timeout_seconds = 30.0;
    config.provider.kind = optloop::ProviderKind::replay;
    config.provider.replay_file = (base / "replay.txt").string();
    config.loop.iterations = iterations;
    config.loop.runs = 1;
    config.loop.on_missing_code_block = policy;
    config.out_dir = (base / out_dir).string();
    optloop::finalize_config(config, "");
    return config;
}

struct ScenarioResult {
    optloop::Config config;
    long long baseline_ms = 0;
    optloop::RunRecord record;
};

// Baseline plus one full replayed run; each scenario gets a fresh subtree so
// replay cursors and artifacts never leak between cases.
inline ScenarioResult run_replay_scenario(const fs::path& base,
                                          const std::vector<std::string>& responses,
                                          int iterations,
                                          optloop::MissingCodePolicy policy =
                                              optloop::MissingCodePolicy::fail_iteration) {
    ScenarioResult result;
    result.config = stub_loop_config(base, "out", responses, iterations, policy);
    result.baseline_ms = optloop::establish_baseline(result.config);
    optloop::Client client(result.config.provider);
    result.record = optloop::run_once(result.config, 1, result.baseline_ms, client);
    return result;
}

}  // namespace testutil
