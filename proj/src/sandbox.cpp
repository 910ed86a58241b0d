#include "skillsynth/sandbox.hpp"

#include <array>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "skillsynth/errors.hpp"

namespace skillsynth {

bool is_safe_relative_path(const std::string& path) {
    if (path.empty()) return false;
    const std::filesystem::path p(path);
    if (p.is_absolute() || p.has_root_name() || p.has_root_directory()) return false;
    for (const auto& part : p) {
        if (part == "..") return false;
    }
    return true;
}

TempDirExecutor::TempDirExecutor(std::filesystem::path root, std::size_t max_log_bytes)
    : root_(std::move(root)), max_log_bytes_(max_log_bytes) {}

namespace {

class TempDir {
public:
    explicit TempDir(const std::filesystem::path& root) {
        std::error_code ec;
        std::filesystem::create_directories(root, ec);
        std::string tmpl = (root / "skillsynth-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw InfraError("sandbox: mkdtemp under " + root.string() + " failed: " + std::strerror(errno));
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CommandOutcome {
    int exit_code = 0;
    bool timed_out = false;
};

CommandOutcome run_one(const std::string& command, const std::filesystem::path& cwd,
                       std::chrono::steady_clock::time_point deadline, std::string& log, std::size_t max_log) {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw InfraError(std::string("sandbox: pipe failed: ") + std::strerror(errno));

    const std::string home = "HOME=" + cwd.string();
    const std::string tmp = "TMPDIR=" + (cwd / ".tmp").string();
    const char* envp[] = {"PATH=/usr/local/bin:/usr/bin:/bin", home.c_str(), tmp.c_str(), "LANG=C", nullptr};
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const std::string dir = cwd.string();

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw InfraError(std::string("sandbox: fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(fds[1], STDOUT_FILENO);
        ::dup2(fds[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        if (::chdir(dir.c_str()) != 0) ::_exit(126);
        ::execve(argv[0], const_cast<char* const*>(argv), const_cast<char* const*>(envp));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(fds[1]);

    CommandOutcome out;
    std::array<char, 4096> buf{};
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            out.timed_out = true;
            break;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd pfd{fds[0], POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
        if (r < 0 && errno == EINTR) continue;
        if (r == 0) continue;
        const auto n = ::read(fds[0], buf.data(), buf.size());
        if (n <= 0) break;  // EOF: every writer (including background children) closed
        if (log.size() < max_log) log.append(buf.data(), std::min<std::size_t>(static_cast<std::size_t>(n), max_log - log.size()));
    }
    ::close(fds[0]);
    if (out.timed_out) ::kill(-pid, SIGKILL);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!out.timed_out) ::kill(-pid, SIGKILL);  // reap stragglers left in the group
    if (out.timed_out) out.exit_code = 124;
    else if (WIFEXITED(status)) out.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) out.exit_code = 128 + WTERMSIG(status);
    else out.exit_code = 1;
    return out;
}

} // namespace

ExecResult TempDirExecutor::run(const ExecRequest& request) {
    TempDir dir(root_);
    std::filesystem::create_directories(dir.path() / ".tmp");
    for (const auto& [rel, content] : request.files) {
        if (!is_safe_relative_path(rel)) throw InfraError("sandbox: refusing unsafe path '" + rel + "'");
        const auto file = dir.path() / rel;
        std::filesystem::create_directories(file.parent_path());
        std::ofstream out(file, std::ios::binary);
        if (!out) throw InfraError("sandbox: cannot materialize " + rel);
        out << content;
    }
    if (!request.env_spec.empty()) {
        std::ofstream(dir.path() / ".environment.txt", std::ios::binary) << request.env_spec;
    }

    ExecResult res;
    const auto deadline = std::chrono::steady_clock::now() + request.timeout;
    for (const auto& cmd : request.commands) {
        res.log += "$ " + cmd + "\n";
        const auto outcome = run_one(cmd, dir.path(), deadline, res.log, max_log_bytes_);
        res.exit_code = outcome.exit_code;
        if (outcome.timed_out) {
            res.timed_out = true;
            res.log += "\n[timed out]\n";
            break;
        }
        if (outcome.exit_code != 0) break;
    }
    return res;
}

} // namespace skillsynth
