#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "trails/error.hpp"
#include "trails/exec_bridge.hpp"

extern char** environ;

namespace trails {

using Clock = std::chrono::steady_clock;

namespace {

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

}  // namespace

struct HarnessExecutor::Process {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string pending;  // bytes read past the last complete line

    ~Process() { terminate(); }

    void terminate() {
        close_fd(to_child);
        close_fd(from_child);
        if (pid > 0) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            int status = 0;
            ::waitpid(pid, &status, 0);
            pid = -1;
        }
    }

    // Closes stdin and gives the harness a moment to exit cleanly.
    void shutdown() {
        close_fd(to_child);
        if (pid > 0) {
            for (int i = 0; i < 50; ++i) {
                int status = 0;
                if (::waitpid(pid, &status, WNOHANG) == pid) {
                    pid = -1;
                    break;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
            }
        }
        terminate();
    }

    bool write_all(std::string_view data) {
        while (!data.empty()) {
            auto n = ::write(to_child, data.data(), data.size());
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            data.remove_prefix(static_cast<std::size_t>(n));
        }
        return true;
    }

    enum class ReadStatus { Line, Eof, Deadline };

    ReadStatus read_line(std::string& line, Clock::time_point deadline) {
        for (;;) {
            if (auto nl = pending.find('\n'); nl != std::string::npos) {
                line = pending.substr(0, nl);
                pending.erase(0, nl + 1);
                return ReadStatus::Line;
            }
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (left.count() <= 0) return ReadStatus::Deadline;
            pollfd pfd{from_child, POLLIN, 0};
            int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                return ReadStatus::Eof;
            }
            if (rc == 0) return ReadStatus::Deadline;
            char buf[65536];
            auto n = ::read(from_child, buf, sizeof buf);
            if (n < 0) {
                if (errno == EINTR || errno == EAGAIN) continue;
                return ReadStatus::Eof;
            }
            if (n == 0) return ReadStatus::Eof;
            pending.append(buf, static_cast<std::size_t>(n));
        }
    }

    std::string exit_description() {
        if (pid <= 0) return "harness exited";
        int status = 0;
        for (int i = 0; i < 100; ++i) {
            if (::waitpid(pid, &status, WNOHANG) == pid) {
                pid = -1;
                if (WIFEXITED(status))
                    return "harness exited with status " + std::to_string(WEXITSTATUS(status));
                if (WIFSIGNALED(status))
                    return "harness killed by signal " + std::to_string(WTERMSIG(status));
                return "harness terminated";
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        return "harness closed its output stream";
    }
};

HarnessExecutor::HarnessExecutor(HarnessOptions options) : options_(std::move(options)) {
    if (options_.pool_size < 1) throw ConfigError("harness pool size must be >= 1");
    if (options_.executable.empty()) throw HarnessSpawnError("no harness executable configured");
    ignore_sigpipe();
}

HarnessExecutor::~HarnessExecutor() {
    std::lock_guard lock(mutex_);
    for (auto& p : idle_) p->shutdown();
    idle_.clear();
}

std::size_t HarnessExecutor::spawned() const {
    std::lock_guard lock(mutex_);
    return spawned_;
}

std::unique_ptr<HarnessExecutor::Process> HarnessExecutor::acquire() {
    {
        std::unique_lock lock(mutex_);
        available_.wait(lock, [&] { return !idle_.empty() || live_ < options_.pool_size; });
        if (!idle_.empty()) {
            auto p = std::move(idle_.back());
            idle_.pop_back();
            return p;
        }
        ++live_;
        ++spawned_;
    }

    auto give_back_slot = [&] {
        std::lock_guard lock(mutex_);
        --live_;
        available_.notify_one();
    };

    const auto& exe = options_.executable;
    const bool on_path = exe.string().find('/') == std::string::npos;
    if (!on_path && ::access(exe.c_str(), X_OK) != 0) {
        give_back_slot();
        throw HarnessSpawnError("harness not executable: " + exe.string() + " (" +
                                std::strerror(errno) + ")");
    }

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
        give_back_slot();
        throw HarnessSpawnError(std::string("pipe: ") + std::strerror(errno));
    }
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        give_back_slot();
        throw HarnessSpawnError(std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<std::string> argv_storage{exe.string()};
    argv_storage.insert(argv_storage.end(), options_.args.begin(), options_.args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());
    argv.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    if (!options_.forward_stderr)
        posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    pid_t pid = -1;
    int rc = on_path ? ::posix_spawnp(&pid, exe.c_str(), &actions, &attr, argv.data(), environ)
                     : ::posix_spawn(&pid, exe.c_str(), &actions, &attr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        give_back_slot();
        throw HarnessSpawnError("cannot start harness " + exe.string() + ": " + std::strerror(rc));
    }

    auto p = std::make_unique<Process>();
    p->pid = pid;
    p->to_child = in_pipe[1];
    p->from_child = out_pipe[0];
    return p;
}

void HarnessExecutor::release(std::unique_ptr<Process> process, bool reusable) {
    if (!reusable) process->terminate();
    std::lock_guard lock(mutex_);
    if (reusable) {
        idle_.push_back(std::move(process));
    } else {
        --live_;
    }
    available_.notify_one();
}

ExecutionResult HarnessExecutor::run(const ExecutionRequest& request) {
    auto process = acquire();
    const auto started = Clock::now();
    const auto deadline =
        started + std::chrono::milliseconds(request.timeout_ms) + options_.grace;

    auto fail = [&](const std::string& why) -> HarnessProtocolError {
        release(std::move(process), false);
        return HarnessProtocolError(why);
    };

    std::string line = to_json(request).dump();
    line.push_back('\n');
    if (!process->write_all(line)) {
        auto why = process->exit_description();
        throw fail("cannot send request: " + why);
    }

    std::string reply;
    switch (process->read_line(reply, deadline)) {
        case Process::ReadStatus::Deadline: {
            release(std::move(process), false);
            ExecutionResult result;
            result.status = ExecStatus::Timeout;
            result.error_text = "harness did not reply within " +
                                std::to_string(request.timeout_ms) + " ms plus grace";
            result.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     Clock::now() - started)
                                     .count();
            return result;
        }
        case Process::ReadStatus::Eof: {
            auto why = process->exit_description();
            throw fail(why + " without replying");
        }
        case Process::ReadStatus::Line:
            break;
    }

    ExecutionResult result;
    try {
        result = result_from_json(nlohmann::json::parse(reply));
        check_result(request, result);
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("malformed harness reply: ") + e.what());
    } catch (const HarnessProtocolError& e) {
        throw fail(e.what());
    }
    if (!request.collect_coverage || result.status != ExecStatus::Ok) result.coverage.reset();
    if (result.output && result.output->kind == OutputKind::StdoutText)
        result.output->text = canonical_stdout(result.output->text);

    release(std::move(process), result.status == ExecStatus::Ok);
    return result;
}

}  // namespace trails
