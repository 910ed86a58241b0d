#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace skillsynth {

/// Relative path -> file content.
using FileManifest = std::map<std::string, std::string>;

/// Rejects absolute paths and any `..` component.
bool is_safe_relative_path(const std::string& path);

struct ExecRequest {
    FileManifest files;
    std::vector<std::string> commands;  // run in order, stopping at the first failure
    std::chrono::milliseconds timeout{300'000};  // wall clock across all commands
    std::string env_spec;
};

struct ExecResult {
    int exit_code = 0;
    bool timed_out = false;
    std::string log;  // interleaved stdout and stderr of every command
};

class SandboxExecutor {
public:
    virtual ~SandboxExecutor() = default;
    /// Throws InfraError when the sandbox itself cannot be set up.
    virtual ExecResult run(const ExecRequest& request) = 0;
};

/// Runs each command with /bin/sh inside a fresh temporary directory under
/// `root`, with a minimal environment (PATH, HOME and TMPDIR pointing into
/// the working directory, LANG=C). The process group is killed on timeout
/// and the directory is removed afterwards.
class TempDirExecutor : public SandboxExecutor {
public:
    explicit TempDirExecutor(std::filesystem::path root = std::filesystem::temp_directory_path(),
                             std::size_t max_log_bytes = 1 << 20);

    ExecResult run(const ExecRequest& request) override;

private:
    std::filesystem::path root_;
    std::size_t max_log_bytes_;
};

} // namespace skillsynth
