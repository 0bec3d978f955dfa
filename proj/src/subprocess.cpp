#include "optloop/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace optloop {
namespace {

constexpr int kMaxTrackedChildren = 64;
std::atomic<pid_t> g_children[kMaxTrackedChildren];

void track_child(pid_t pid) {
    for (auto& slot : g_children) {
        pid_t expected = 0;
        if (slot.compare_exchange_strong(expected, pid)) return;
    }
}

void untrack_child(pid_t pid) {
    for (auto& slot : g_children) {
        pid_t expected = pid;
        if (slot.compare_exchange_strong(expected, 0)) return;
    }
}

extern "C" void forward_signal(int signo) {
    for (auto& slot : g_children) {
        pid_t pid = slot.load();
        if (pid > 0) kill(-pid, SIGKILL);
    }
    signal(signo, SIG_DFL);
    raise(signo);
}

void read_available(int fd, std::string& sink, bool& eof) {
    char buf[4096];
    for (;;) {
        ssize_t n = read(fd, buf, sizeof buf);
        if (n > 0) {
            sink.append(buf, static_cast<size_t>(n));
            if (n < static_cast<ssize_t>(sizeof buf)) return;
            continue;
        }
        if (n == 0) { eof = true; return; }
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) return;
        eof = true;
        return;
    }
}

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (pipe(fds) != 0) throw std::runtime_error("pipe() failed");
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    void close_read() { if (fds[0] >= 0) { close(fds[0]); fds[0] = -1; } }
    void close_write() { if (fds[1] >= 0) { close(fds[1]); fds[1] = -1; } }
    int read_fd() const { return fds[0]; }
    int write_fd() const { return fds[1]; }
};

}  // namespace

void install_signal_forwarding() {
    struct sigaction sa;
    std::memset(&sa, 0, sizeof sa);
    sa.sa_handler = forward_signal;
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
}

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& workdir,
                          double timeout_seconds) {
    if (argv.empty()) throw std::invalid_argument("run_process: empty argv");

    Pipe out_pipe, err_pipe, status_pipe;
    if (fcntl(status_pipe.write_fd(), F_SETFD, FD_CLOEXEC) != 0)
        throw std::runtime_error("fcntl(FD_CLOEXEC) failed");

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork() failed");

    if (pid == 0) {
        setpgid(0, 0);
        if (!workdir.empty() && chdir(workdir.c_str()) != 0) {
            int e = errno;
            [[maybe_unused]] ssize_t w = write(status_pipe.write_fd(), &e, sizeof e);
            _exit(127);
        }
        dup2(out_pipe.write_fd(), STDOUT_FILENO);
        dup2(err_pipe.write_fd(), STDERR_FILENO);
        out_pipe.close_read();
        out_pipe.close_write();
        err_pipe.close_read();
        err_pipe.close_write();
        status_pipe.close_read();
        execvp(cargv[0], cargv.data());
        int e = errno;
        [[maybe_unused]] ssize_t w = write(status_pipe.write_fd(), &e, sizeof e);
        _exit(127);
    }

    setpgid(pid, pid);  // both sides set it; whichever wins is fine
    track_child(pid);
    out_pipe.close_write();
    err_pipe.close_write();
    status_pipe.close_write();

    fcntl(out_pipe.read_fd(), F_SETFL, O_NONBLOCK);
    fcntl(err_pipe.read_fd(), F_SETFL, O_NONBLOCK);

    using clock = std::chrono::steady_clock;
    const bool capped = timeout_seconds > 0.0;
    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>(capped ? timeout_seconds : 0.0));

    ProcessResult result;
    bool out_eof = false, err_eof = false;
    while (!out_eof || !err_eof) {
        struct pollfd fds[2];
        nfds_t nfds = 0;
        if (!out_eof) fds[nfds++] = {out_pipe.read_fd(), POLLIN, 0};
        if (!err_eof) fds[nfds++] = {err_pipe.read_fd(), POLLIN, 0};

        int wait_ms = -1;
        if (capped && !result.timed_out) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
            wait_ms = left > 0 ? static_cast<int>(left) : 0;
        }
        int rc = poll(fds, nfds, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (capped && !result.timed_out && clock::now() >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            // fall through to drain whatever was written before the kill
        }
        for (nfds_t i = 0; i < nfds; ++i) {
            if (fds[i].revents == 0) continue;
            if (fds[i].fd == out_pipe.read_fd())
                read_available(fds[i].fd, result.out, out_eof);
            else
                read_available(fds[i].fd, result.err, err_eof);
        }
    }

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {}
    untrack_child(pid);

    int exec_errno = 0;
    ssize_t n = read(status_pipe.read_fd(), &exec_errno, sizeof exec_errno);
    if (n == static_cast<ssize_t>(sizeof exec_errno)) {
        if (exec_errno == ENOENT) throw ExecutableNotFound(argv[0]);
        throw std::runtime_error("failed to start " + argv[0] + ": " + std::strerror(exec_errno));
    }

    if (WIFEXITED(status))
        result.exit_status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_status = 128 + WTERMSIG(status);
    return result;
}

}  // namespace optloop
