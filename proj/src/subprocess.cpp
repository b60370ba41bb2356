#include "kgqa/subprocess.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>

namespace kgqa {

LineSubprocess::LineSubprocess(const std::string& command) : command_(command) {
    int to_pipe[2];    // parent writes, child reads
    int from_pipe[2];  // child writes, parent reads
    if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0)
        throw std::runtime_error("pipe() failed: " + std::string(std::strerror(errno)));

    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork() failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        dup2(to_pipe[0], STDIN_FILENO);
        dup2(from_pipe[1], STDOUT_FILENO);
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_pipe[0]);
    close(from_pipe[1]);
    pid_ = pid;
    to_child_ = to_pipe[1];
    from_child_ = from_pipe[0];
}

LineSubprocess::~LineSubprocess() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }
}

std::string LineSubprocess::request(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t written = 0;
    while (written < payload.size()) {
        const ssize_t n = write(to_child_, payload.data() + written, payload.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("provider \"" + command_ +
                                     "\": write failed: " + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }

    for (;;) {
        const std::size_t nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string reply = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!reply.empty() && reply.back() == '\r') reply.pop_back();
            return reply;
        }
        char chunk[4096];
        const ssize_t n = read(from_child_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("provider \"" + command_ +
                                     "\": read failed: " + std::strerror(errno));
        }
        if (n == 0)
            throw std::runtime_error("provider \"" + command_ +
                                     "\" closed its output stream");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace kgqa
