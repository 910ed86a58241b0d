#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillsynth/providers.hpp"
#include "skillsynth/retry.hpp"
#include "skillsynth/sampler.hpp"
#include "skillsynth/sandbox.hpp"

namespace skillsynth {

struct TaskPlan {
    std::string path_ref;
    std::vector<std::string> sub_objectives;
    std::vector<std::string> expected_outputs;
};

/// Throws DataError unless the plan has at least one sub-objective and each
/// one mentions a skill or scenario of `path` (by id, name or text,
/// case-insensitively).
void validate_plan(const TaskPlan& plan, const Path& path);

/// Reference string for a path: stable hash over its scenario and skill ids.
std::string path_ref(const Path& path);

struct TaskInstance {
    std::string instruction;
    FileManifest snapshot;
    std::string env_spec;
    FileManifest verify_scripts;
    FileManifest oracle_solution;

    /// Names of the empty components, in layout order.
    std::vector<std::string> missing_components() const;
};

/// Mechanical self-containedness screen: returns the first oracle-solution
/// line that the instruction repeats verbatim. Shebangs and lines without
/// any alphanumeric character are ignored.
std::optional<std::string> find_solution_leak(const TaskInstance& instance);

struct OracleReport {
    bool passed = false;
    int exit_code = 0;
    bool timed_out = false;
    std::string log;
};

struct RubricReport {
    bool alignment_ok = false;
    bool self_contained_ok = false;
    bool undecided = false;
    std::vector<std::string> reasons;

    bool passed() const { return alignment_ok && self_contained_ok; }
};

struct VerificationReport {
    OracleReport oracle;
    RubricReport rubric;
};

struct RepairBudget {
    std::size_t max_cycles = 3;
    std::size_t max_tool_calls = 20;
    std::size_t used_cycles = 0;
    std::vector<std::size_t> tool_calls;  // one entry per used cycle
};

enum class OutcomeClass { AllPassed, OraclePassedOnly, Failed };

std::string_view to_string(OutcomeClass c);
OutcomeClass outcome_from_string(std::string_view s);

// ---- provider interfaces ----

class Planner {
public:
    virtual ~Planner() = default;
    virtual TaskPlan plan(const Path& path, const ProviderOptions& options) = 0;
};

/// Tool-loop protocol. Each call receives a JSON request
///   {"plan": {...}, "cycle": n, "call_index": i, "feedback": "...",
///    "last_result": {...} | null, "temperature": t}
/// and returns the next tool call {"tool": name, "args": {...}}. Tools:
/// write_file {path, content}, read_file {path}, delete_file {path},
/// list_files {}, run_command {command}, finish {}.
class Constructor {
public:
    virtual ~Constructor() = default;
    virtual nlohmann::json step(const nlohmann::json& request) = 0;
};

struct RubricVerdict {
    bool alignment_ok = false;
    bool self_contained_ok = false;
    std::vector<std::string> reasons;
};

class RubricJudge {
public:
    virtual ~RubricJudge() = default;
    virtual RubricVerdict judge(const TaskInstance& instance, const std::string& prompt) = 0;
};

struct HarnessProviders {
    Planner& planner;
    Constructor& constructor;
    RubricJudge& rubric;
    SandboxExecutor& executor;
};

struct HarnessConfig {
    std::size_t max_cycles = 3;
    std::size_t max_tool_calls = 20;
    std::chrono::milliseconds timeout{300'000};
    std::size_t feedback_log_lines = 100;
    std::size_t feedback_max_chars = 8000;
    RetryPolicy retry;
    ProviderOptions options;
    std::string rubric_template = "{{{instruction}}}\n\n{{{tests}}}";
};

// ---- operations ----

TaskPlan plan(const Path& path, Planner& planner, const ProviderOptions& options = {},
              const RetryPolicy& retry = {});

struct ConstructionResult {
    std::optional<TaskInstance> instance;
    std::size_t tool_calls = 0;
    std::string error;  // empty on success
    std::vector<nlohmann::json> events;
};

/// One construction cycle. `workspace` carries the constructor's files
/// across repair cycles.
ConstructionResult construct(const TaskPlan& plan, Constructor& constructor, FileManifest& workspace,
                             std::size_t cycle, const std::string& feedback, const HarnessConfig& config,
                             SandboxExecutor& executor);

/// Splits a workspace into the five components by path prefix.
TaskInstance instance_from_workspace(const FileManifest& workspace);

/// Materializes the snapshot at the working-directory root with solution/
/// and tests/ beside it, then runs solution/*.sh followed by tests/*.sh.
/// Throws InfraError when the sandbox cannot be set up.
OracleReport verify_execution(const TaskInstance& instance, SandboxExecutor& executor,
                              std::chrono::milliseconds timeout = std::chrono::seconds(300));

/// Judge failure (after retries) yields an undecided report with both flags
/// false.
RubricReport verify_rubric(const TaskInstance& instance, RubricJudge& judge,
                           const std::string& prompt_template = "{{{instruction}}}\n\n{{{tests}}}",
                           const RetryPolicy& retry = {});

/// Oracle log tail plus rubric reasons, capped at `max_chars`.
std::string make_feedback(const std::string& construct_error, const VerificationReport* report,
                          std::size_t log_lines, std::size_t max_chars);

enum class SynthesisStatus { Completed, Aborted };

struct SynthesisResult {
    std::string path_ref;
    SynthesisStatus status = SynthesisStatus::Completed;
    std::optional<OutcomeClass> outcome;  // set iff Completed
    std::string abort_reason;
    std::optional<TaskInstance> instance;  // the best instance unless Failed
    std::optional<VerificationReport> report;
    RepairBudget budget;
    bool retried = false;
    std::vector<nlohmann::json> audit;

    std::size_t total_tool_calls() const;
};

SynthesisResult synthesize(const Path& path, HarnessProviders providers, const HarnessConfig& config);

/// Re-derives the outcome class from an audit log alone.
std::optional<OutcomeClass> classify_from_audit(const std::vector<nlohmann::json>& audit);

/// Synthesizes each path with at most `max_in_flight` concurrent loops. When
/// `retry_temperature` is set, paths that end Failed are run once more with
/// that temperature and the retry result replaces the first when it is not
/// Failed.
std::vector<SynthesisResult> synthesize_all(const std::vector<Path>& paths, HarnessProviders providers,
                                            const HarnessConfig& config, std::size_t max_in_flight = 1,
                                            std::optional<double> retry_temperature = std::nullopt);

struct OutcomeSummary {
    std::size_t total = 0;  // completed syntheses
    std::size_t aborted = 0;
    std::size_t all_passed = 0;
    std::size_t oracle_passed_only = 0;
    std::size_t failed = 0;
    double all_passed_pct = 0.0;
    double oracle_passed_only_pct = 0.0;
    double failed_pct = 0.0;
    double avg_cycles = 0.0;
    double avg_tool_calls = 0.0;
    std::size_t recovered = 0;
};

OutcomeSummary outcome_summary(const std::vector<SynthesisResult>& results);
std::string outcome_summary_to_json(const OutcomeSummary& s);

namespace reported {
// Harness outcome shares and repair statistics from the original large-scale
// run. Documentation only.
inline constexpr double kAllPassedPct = 92.0;
inline constexpr double kOraclePassedOnlyPct = 3.7;
inline constexpr double kFailedPct = 4.3;
inline constexpr double kAvgRepairCycles = 2.31;
} // namespace reported

/// Writes instruction.md, snapshot/, environment.txt, tests/, solution/ and
/// meta.json under `dir`, replacing any previous content atomically. Only
/// meta.json is written for Failed or aborted results.
void write_instance(const std::filesystem::path& dir, const SynthesisResult& result, const HarnessConfig& config);

std::string audit_to_json_lines(const std::vector<nlohmann::json>& audit);

} // namespace skillsynth
