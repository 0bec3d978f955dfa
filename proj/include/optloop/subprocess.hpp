#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace optloop {

// Outcome of one child process. exit_status is the raw exit code for normal
// termination, 128+signo for signal deaths.
struct ProcessResult {
    int exit_status = 0;
    std::string out;
    std::string err;
    bool timed_out = false;
};

struct ExecutableNotFound : std::runtime_error {
    explicit ExecutableNotFound(const std::string& exe)
        : std::runtime_error("executable not found: " + exe), executable(exe) {}
    std::string executable;
};

// Runs argv[0] with the given arguments, capturing stdout and stderr.
// workdir empty means inherit the current directory. timeout_seconds <= 0
// disables the wall-clock cap; on expiry the child's process group is killed
// and timed_out is set. Never throws on nonzero exit.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& workdir = {},
                          double timeout_seconds = 0.0);

// Installs SIGINT/SIGTERM handlers that kill any live child process groups
// before re-raising the signal. Call once from main.
void install_signal_forwarding();

}  // namespace optloop
