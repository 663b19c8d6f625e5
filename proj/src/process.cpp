/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "reprodock/errors.hpp"

extern char** environ;

namespace reprodock {

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::vector<std::pair<std::string, std::string>>& env,
                          int timeout_seconds, const std::filesystem::path& cwd) {
    if (argv.empty()) {
        throw Error("run_process: empty argv");
    }

    int out_pipe[2];
    int err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
        throw Error("run_process: pipe failed");
    }

    std::vector<std::string> env_storage;
    for (char** e = environ; *e != nullptr; ++e) {
        std::string_view entry(*e);
        auto eq = entry.find('=');
        std::string_view key = entry.substr(0, eq);
        bool overridden = false;
        for (const auto& [k, v] : env) {
            if (k == key) {
                overridden = true;
                break;
            }
        }
        if (!overridden) env_storage.emplace_back(entry);
    }
    for (const auto& [k, v] : env) {
        env_storage.push_back(k + "=" + v);
    }

    pid_t pid = fork();
    if (pid < 0) {
        throw Error("run_process: fork failed");
    }
    if (pid == 0) {
        setpgid(0, 0);  // own process group, so a timeout can kill the tree
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0) {
            _exit(127);
        }
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        std::vector<char*> cenv;
        cenv.reserve(env_storage.size() + 1);
        for (const auto& e : env_storage) cenv.push_back(const_cast<char*>(e.c_str()));
        cenv.push_back(nullptr);
        execvpe(argv[0].c_str(), cargv.data(), cenv.data());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
    bool open_out = true;
    bool open_err = true;
    char buf[16 * 1024];
    while (open_out || open_err) {
        struct pollfd fds[2];
        nfds_t nfds = 0;
        int idx_out = -1;
        int idx_err = -1;
        if (open_out) {
            idx_out = static_cast<int>(nfds);
            fds[nfds++] = {out_pipe[0], POLLIN, 0};
        }
        if (open_err) {
            idx_err = static_cast<int>(nfds);
            fds[nfds++] = {err_pipe[0], POLLIN, 0};
        }
        int wait_ms = -1;
        if (timeout_seconds > 0) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
            if (left <= 0) {
                result.timed_out = true;
                kill(-pid, SIGKILL);
                break;
            }
            wait_ms = static_cast<int>(left);
        }
        int rc = poll(fds, nfds, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            break;
        }
        auto drain = [&](int fd, std::string& sink, bool& open_flag) {
            ssize_t n = ::read(fd, buf, sizeof buf);
            if (n <= 0) {
                close(fd);
                open_flag = false;
            } else {
                sink.append(buf, static_cast<std::size_t>(n));
            }
        };
        if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP)) != 0) {
            drain(out_pipe[0], result.out, open_out);
        }
        if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP)) != 0) {
            drain(err_pipe[0], result.err, open_err);
        }
    }
    if (open_out) close(out_pipe[0]);
    if (open_err) close(err_pipe[0]);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace reprodock
