#include "skillsynth/harness.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "skillsynth/digest.hpp"
#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/parallel.hpp"
#include "skillsynth/prompts.hpp"

namespace skillsynth {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        out.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

std::string tail_lines(const std::string& text, std::size_t n) {
    std::size_t pos = text.size();
    if (pos > 0 && text.back() == '\n') --pos;
    std::size_t count = 0;
    while (pos > 0) {
        const auto nl = text.rfind('\n', pos - 1);
        if (nl == std::string::npos) return text;
        if (++count == n) return text.substr(nl + 1);
        pos = nl;
    }
    return text;
}

bool has_alnum(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c); });
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

FileManifest sandbox_files(const TaskInstance& inst) {
    FileManifest files = inst.snapshot;
    for (const auto& [p, c] : inst.oracle_solution) files["solution/" + p] = c;
    for (const auto& [p, c] : inst.verify_scripts) files["tests/" + p] = c;
    return files;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

constexpr std::string_view kComponentDirs[] = {"snapshot/", "tests/", "solution/"};

bool writable_path(const std::string& path) {
    if (!is_safe_relative_path(path)) return false;
    if (path == "instruction.md" || path == "environment.txt") return true;
    for (auto dir : kComponentDirs) {
        if (path.size() > dir.size() && path.compare(0, dir.size(), dir) == 0) return true;
    }
    return false;
}

json oracle_json(const OracleReport& r, std::size_t log_lines) {
    return {{"passed", r.passed}, {"exit_code", r.exit_code}, {"timed_out", r.timed_out},
            {"log_tail", tail_lines(r.log, log_lines)}};
}

json rubric_json(const RubricReport& r) {
    return {{"alignment_ok", r.alignment_ok},
            {"self_contained_ok", r.self_contained_ok},
            {"undecided", r.undecided},
            {"reasons", r.reasons}};
}

} // namespace

std::string path_ref(const Path& path) {
    std::string joined;
    for (std::size_t i = 0; i < path.scenarios.size(); ++i) {
        joined += path.scenarios[i];
        if (i < path.skills.size()) joined += "|" + path.skills[i] + "|";
    }
    return stable_id("p_", {joined});
}

void validate_plan(const TaskPlan& plan, const Path& path) {
    if (plan.sub_objectives.empty()) throw DataError("plan has no sub-objectives");
    std::vector<std::string> needles;
    for (const auto& v : {path.scenarios, path.skills, path.scenario_texts, path.skill_names}) {
        for (const auto& s : v) {
            if (!s.empty()) needles.push_back(lower(s));
        }
    }
    for (std::size_t i = 0; i < plan.sub_objectives.size(); ++i) {
        const auto obj = lower(plan.sub_objectives[i]);
        const bool refers = std::any_of(needles.begin(), needles.end(),
                                        [&](const std::string& n) { return obj.find(n) != std::string::npos; });
        if (!refers) {
            throw DataError("sub-objective " + std::to_string(i + 1) + " mentions no skill or scenario of the path: '" +
                            plan.sub_objectives[i] + "'");
        }
    }
}

std::vector<std::string> TaskInstance::missing_components() const {
    std::vector<std::string> out;
    if (trim(instruction).empty()) out.emplace_back("instruction");
    if (snapshot.empty()) out.emplace_back("snapshot");
    if (trim(env_spec).empty()) out.emplace_back("environment");
    if (verify_scripts.empty()) out.emplace_back("verify_scripts");
    if (oracle_solution.empty()) out.emplace_back("oracle_solution");
    return out;
}

std::optional<std::string> find_solution_leak(const TaskInstance& inst) {
    std::vector<std::string> instruction_lines;
    for (const auto& l : split_lines(inst.instruction)) instruction_lines.push_back(trim(l));
    for (const auto& [file, content] : inst.oracle_solution) {
        for (const auto& raw : split_lines(content)) {
            const auto line = trim(raw);
            if (!has_alnum(line) || line.rfind("#!", 0) == 0) continue;
            if (std::find(instruction_lines.begin(), instruction_lines.end(), line) != instruction_lines.end()) return line;
            // Long lines embedded in instruction prose count as well.
            if (line.size() >= 8 && inst.instruction.find(line) != std::string::npos) return line;
        }
    }
    return std::nullopt;
}

std::string_view to_string(OutcomeClass c) {
    switch (c) {
        case OutcomeClass::AllPassed: return "all_passed";
        case OutcomeClass::OraclePassedOnly: return "oracle_passed_only";
        case OutcomeClass::Failed: return "failed";
    }
    return "failed";
}

OutcomeClass outcome_from_string(std::string_view s) {
    if (s == "all_passed") return OutcomeClass::AllPassed;
    if (s == "oracle_passed_only") return OutcomeClass::OraclePassedOnly;
    if (s == "failed") return OutcomeClass::Failed;
    throw DataError("unknown outcome class '" + std::string(s) + "'");
}

TaskPlan plan(const Path& path, Planner& planner, const ProviderOptions& options, const RetryPolicy& retry) {
    std::string err;
    auto p = with_retries(retry, [&] { return planner.plan(path, options); }, &err);
    if (!p) throw ProviderError("planner failed: " + err);
    if (p->path_ref.empty()) p->path_ref = path_ref(path);
    validate_plan(*p, path);
    return std::move(*p);
}

TaskInstance instance_from_workspace(const FileManifest& ws) {
    TaskInstance inst;
    for (const auto& [path, content] : ws) {
        if (path == "instruction.md") {
            inst.instruction = content;
        } else if (path == "environment.txt") {
            inst.env_spec = content;
        } else if (path.rfind("snapshot/", 0) == 0) {
            inst.snapshot[path.substr(9)] = content;
        } else if (path.rfind("tests/", 0) == 0) {
            inst.verify_scripts[path.substr(6)] = content;
        } else if (path.rfind("solution/", 0) == 0) {
            inst.oracle_solution[path.substr(9)] = content;
        }
    }
    return inst;
}

namespace {

json run_tool(const std::string& tool, const json& args, FileManifest& ws, SandboxExecutor& executor,
              const HarnessConfig& config) {
    auto str_arg = [&](const char* key) -> std::optional<std::string> {
        if (!args.is_object() || !args.contains(key) || !args[key].is_string()) return std::nullopt;
        return args[key].get<std::string>();
    };
    if (tool == "write_file") {
        const auto path = str_arg("path");
        const auto content = str_arg("content");
        if (!path || !content) return {{"error", "write_file needs string 'path' and 'content'"}};
        if (!writable_path(*path)) {
            return {{"error", "path must be instruction.md, environment.txt or under snapshot/, tests/, solution/"}};
        }
        ws[*path] = *content;
        return {{"ok", true}};
    }
    if (tool == "read_file") {
        const auto path = str_arg("path");
        if (!path) return {{"error", "read_file needs a string 'path'"}};
        const auto it = ws.find(*path);
        if (it == ws.end()) return {{"error", "no such file: " + *path}};
        return {{"content", it->second}};
    }
    if (tool == "delete_file") {
        const auto path = str_arg("path");
        if (!path) return {{"error", "delete_file needs a string 'path'"}};
        if (ws.erase(*path) == 0) return {{"error", "no such file: " + *path}};
        return {{"ok", true}};
    }
    if (tool == "list_files") {
        json files = json::array();
        for (const auto& [p, c] : ws) files.push_back(p);
        return {{"files", files}};
    }
    if (tool == "run_command") {
        const auto command = str_arg("command");
        if (!command) return {{"error", "run_command needs a string 'command'"}};
        const auto inst = instance_from_workspace(ws);
        const auto r = executor.run({sandbox_files(inst), {*command}, config.timeout, inst.env_spec});
        return {{"exit_code", r.exit_code}, {"timed_out", r.timed_out},
                {"output", tail_lines(r.log, config.feedback_log_lines)}};
    }
    return {{"error", "unknown tool '" + tool + "'"}};
}

json plan_json(const TaskPlan& p) {
    return {{"path_ref", p.path_ref}, {"sub_objectives", p.sub_objectives}, {"expected_outputs", p.expected_outputs}};
}

} // namespace

ConstructionResult construct(const TaskPlan& plan, Constructor& constructor, FileManifest& workspace,
                             std::size_t cycle, const std::string& feedback, const HarnessConfig& config,
                             SandboxExecutor& executor) {
    ConstructionResult res;
    json last_result = nullptr;
    bool finished = false;
    for (;;) {
        const json request = {{"plan", plan_json(plan)},
                              {"cycle", cycle},
                              {"call_index", res.tool_calls},
                              {"feedback", feedback},
                              {"last_result", last_result},
                              {"temperature", config.options.temperature}};
        std::string err;
        const auto reply = with_retries(config.retry, [&] { return constructor.step(request); }, &err);
        if (!reply) {
            res.error = "constructor failed: " + err;
            break;
        }
        const std::string tool = reply->is_object() ? reply->value("tool", std::string{}) : std::string{};
        if (tool == "finish") {
            finished = true;
            break;
        }
        if (res.tool_calls >= config.max_tool_calls) {
            res.error = "tool-call budget of " + std::to_string(config.max_tool_calls) + " exhausted";
            break;
        }
        ++res.tool_calls;
        const json args = reply->is_object() && reply->contains("args") ? (*reply)["args"] : json::object();
        last_result = tool.empty() ? json{{"error", "malformed tool call"}} : run_tool(tool, args, workspace, executor, config);
        res.events.push_back({{"event", "tool_call"},
                              {"cycle", cycle},
                              {"index", res.tool_calls},
                              {"tool", tool},
                              {"args", args},
                              {"result", last_result}});
    }
    if (!finished) return res;

    auto inst = instance_from_workspace(workspace);
    const auto missing = inst.missing_components();
    if (!missing.empty()) {
        res.error = "missing components:";
        for (const auto& m : missing) res.error += " " + m;
        return res;
    }
    res.instance = std::move(inst);
    return res;
}

OracleReport verify_execution(const TaskInstance& inst, SandboxExecutor& executor, std::chrono::milliseconds timeout) {
    ExecRequest req{sandbox_files(inst), {}, timeout, inst.env_spec};
    for (const auto& [p, c] : inst.oracle_solution) {
        if (ends_with(p, ".sh")) req.commands.push_back("sh " + shell_quote("solution/" + p));
    }
    const auto solution_steps = req.commands.size();
    for (const auto& [p, c] : inst.verify_scripts) {
        if (ends_with(p, ".sh")) req.commands.push_back("sh " + shell_quote("tests/" + p));
    }
    OracleReport rep;
    if (req.commands.size() == solution_steps) {
        rep.exit_code = -1;
        rep.log = "no runnable verification script (tests/*.sh)\n";
        return rep;
    }
    const auto r = executor.run(req);
    rep.exit_code = r.exit_code;
    rep.timed_out = r.timed_out;
    rep.log = r.log;
    rep.passed = r.exit_code == 0 && !r.timed_out;
    return rep;
}

RubricReport verify_rubric(const TaskInstance& inst, RubricJudge& judge, const std::string& prompt_template,
                           const RetryPolicy& retry) {
    std::string tests;
    for (const auto& [p, c] : inst.verify_scripts) tests += "--- " + p + "\n" + c + "\n";
    const auto prompt = render_template(prompt_template, {{"instruction", inst.instruction}, {"tests", tests}});

    RubricReport rep;
    std::string err;
    const auto verdict = with_retries(retry, [&] { return judge.judge(inst, prompt); }, &err);
    if (!verdict) {
        rep.undecided = true;
        rep.reasons.push_back("rubric judge undecided: " + err);
    } else {
        rep.alignment_ok = verdict->alignment_ok;
        rep.self_contained_ok = verdict->self_contained_ok;
        rep.reasons = verdict->reasons;
    }
    if (const auto leak = find_solution_leak(inst)) {
        rep.self_contained_ok = false;
        rep.reasons.push_back("instruction repeats an oracle solution line verbatim: " + *leak);
    }
    if (!rep.passed() && rep.reasons.empty()) {
        if (!rep.alignment_ok) rep.reasons.emplace_back("instruction and tests are misaligned");
        if (!rep.self_contained_ok) rep.reasons.emplace_back("instruction is not self-contained");
    }
    return rep;
}

std::string make_feedback(const std::string& construct_error, const VerificationReport* report, std::size_t log_lines,
                          std::size_t max_chars) {
    std::string out;
    if (!construct_error.empty()) out += "construction failed: " + construct_error + "\n";
    if (report) {
        const auto& o = report->oracle;
        out += std::string("oracle: ") + (o.passed ? "passed" : "failed") + " (exit " + std::to_string(o.exit_code) +
               (o.timed_out ? ", timed out" : "") + ")\n";
        if (!o.passed) out += tail_lines(o.log, log_lines);
        if (!out.empty() && out.back() != '\n') out += '\n';
        for (const auto& r : report->rubric.reasons) out += "rubric: " + r + "\n";
    }
    if (out.size() > max_chars) out.resize(max_chars);
    return out;
}

std::size_t SynthesisResult::total_tool_calls() const {
    std::size_t n = 0;
    for (auto c : budget.tool_calls) n += c;
    return n;
}

SynthesisResult synthesize(const Path& path, HarnessProviders providers, const HarnessConfig& config) {
    SynthesisResult res;
    res.path_ref = path_ref(path);
    res.budget.max_cycles = config.max_cycles;
    res.budget.max_tool_calls = config.max_tool_calls;
    res.audit.push_back({{"event", "start"},
                         {"path_ref", res.path_ref},
                         {"max_cycles", config.max_cycles},
                         {"max_tool_calls", config.max_tool_calls},
                         {"temperature", config.options.temperature}});

    auto abort = [&](const std::string& reason) {
        res.status = SynthesisStatus::Aborted;
        res.outcome.reset();
        res.instance.reset();
        res.abort_reason = reason;
        res.audit.push_back({{"event", "abort"}, {"reason", reason}});
        return res;
    };

    TaskPlan p;
    try {
        p = plan(path, providers.planner, config.options, config.retry);
    } catch (const ProviderError& e) {
        return abort(e.what());
    } catch (const DataError& e) {
        return abort(std::string("invalid plan: ") + e.what());
    }
    res.audit.push_back({{"event", "plan"}, {"plan", plan_json(p)}});

    FileManifest workspace;
    std::string feedback;
    std::optional<TaskInstance> best;
    std::optional<VerificationReport> best_report;
    bool all_passed = false;

    for (std::size_t cycle = 1; cycle <= config.max_cycles && !all_passed; ++cycle) {
        res.budget.used_cycles = cycle;
        res.audit.push_back({{"event", "cycle"}, {"cycle", cycle}, {"feedback", feedback}});

        ConstructionResult cr;
        try {
            cr = construct(p, providers.constructor, workspace, cycle, feedback, config, providers.executor);
        } catch (const InfraError& e) {
            return abort(e.what());
        }
        for (auto& ev : cr.events) res.audit.push_back(std::move(ev));
        res.budget.tool_calls.push_back(cr.tool_calls);
        res.audit.push_back({{"event", "construct"}, {"cycle", cycle}, {"tool_calls", cr.tool_calls}, {"error", cr.error}});
        if (!cr.instance) {
            feedback = make_feedback(cr.error, nullptr, config.feedback_log_lines, config.feedback_max_chars);
            continue;
        }

        VerificationReport report;
        try {
            report.oracle = verify_execution(*cr.instance, providers.executor, config.timeout);
        } catch (const InfraError& e) {
            return abort(e.what());
        }
        report.rubric = verify_rubric(*cr.instance, providers.rubric, config.rubric_template, config.retry);
        res.audit.push_back({{"event", "verify"},
                             {"cycle", cycle},
                             {"oracle", oracle_json(report.oracle, config.feedback_log_lines)},
                             {"rubric", rubric_json(report.rubric)}});

        if (report.oracle.passed) {
            best = cr.instance;
            best_report = report;
            all_passed = report.rubric.passed();
        }
        if (!all_passed) feedback = make_feedback("", &report, config.feedback_log_lines, config.feedback_max_chars);
    }

    if (all_passed) res.outcome = OutcomeClass::AllPassed;
    else if (best) res.outcome = OutcomeClass::OraclePassedOnly;
    else res.outcome = OutcomeClass::Failed;
    if (*res.outcome != OutcomeClass::Failed) {
        res.instance = std::move(best);
        res.report = std::move(best_report);
    }
    res.audit.push_back(
        {{"event", "outcome"}, {"outcome", to_string(*res.outcome)}, {"used_cycles", res.budget.used_cycles}});
    return res;
}

std::optional<OutcomeClass> classify_from_audit(const std::vector<json>& audit) {
    bool oracle_passed = false, both_passed = false, finished = false;
    for (const auto& ev : audit) {
        const auto kind = ev.value("event", std::string{});
        if (kind == "abort") return std::nullopt;
        if (kind == "outcome") finished = true;
        if (kind == "verify" && ev.at("oracle").at("passed").get<bool>()) {
            oracle_passed = true;
            const auto& r = ev.at("rubric");
            if (r.at("alignment_ok").get<bool>() && r.at("self_contained_ok").get<bool>()) both_passed = true;
        }
    }
    if (!finished) return std::nullopt;
    if (both_passed) return OutcomeClass::AllPassed;
    return oracle_passed ? OutcomeClass::OraclePassedOnly : OutcomeClass::Failed;
}

std::vector<SynthesisResult> synthesize_all(const std::vector<Path>& paths, HarnessProviders providers,
                                            const HarnessConfig& config, std::size_t max_in_flight,
                                            std::optional<double> retry_temperature) {
    std::vector<SynthesisResult> out(paths.size());
    parallel_for(paths.size(), max_in_flight, [&](std::size_t i) { out[i] = synthesize(paths[i], providers, config); });
    if (!retry_temperature) return out;

    std::vector<std::size_t> failed;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].outcome == OutcomeClass::Failed) failed.push_back(i);
    }
    auto hot = config;
    hot.options.temperature = *retry_temperature;
    parallel_for(failed.size(), max_in_flight, [&](std::size_t j) {
        const auto i = failed[j];
        auto again = synthesize(paths[i], providers, hot);
        if (again.outcome && *again.outcome != OutcomeClass::Failed) out[i] = std::move(again);
        out[i].retried = true;
    });
    return out;
}

OutcomeSummary outcome_summary(const std::vector<SynthesisResult>& results) {
    OutcomeSummary s;
    std::size_t cycles = 0, calls = 0;
    for (const auto& r : results) {
        if (r.status == SynthesisStatus::Aborted || !r.outcome) {
            ++s.aborted;
            continue;
        }
        ++s.total;
        cycles += r.budget.used_cycles;
        calls += r.total_tool_calls();
        switch (*r.outcome) {
            case OutcomeClass::AllPassed: ++s.all_passed; break;
            case OutcomeClass::OraclePassedOnly: ++s.oracle_passed_only; break;
            case OutcomeClass::Failed: ++s.failed; break;
        }
        if (*r.outcome != OutcomeClass::Failed && r.budget.used_cycles >= 2) ++s.recovered;
    }
    if (s.total > 0) {
        const auto n = static_cast<double>(s.total);
        s.all_passed_pct = 100.0 * static_cast<double>(s.all_passed) / n;
        s.oracle_passed_only_pct = 100.0 * static_cast<double>(s.oracle_passed_only) / n;
        s.failed_pct = 100.0 * static_cast<double>(s.failed) / n;
        s.avg_cycles = static_cast<double>(cycles) / n;
        s.avg_tool_calls = static_cast<double>(calls) / n;
    }
    return s;
}

std::string outcome_summary_to_json(const OutcomeSummary& s) {
    const json j = {{"total", s.total},
                    {"aborted", s.aborted},
                    {"counts", {{"all_passed", s.all_passed}, {"oracle_passed_only", s.oracle_passed_only}, {"failed", s.failed}}},
                    {"percent",
                     {{"all_passed", s.all_passed_pct},
                      {"oracle_passed_only", s.oracle_passed_only_pct},
                      {"failed", s.failed_pct}}},
                    {"avg_cycles", s.avg_cycles},
                    {"avg_tool_calls", s.avg_tool_calls},
                    {"recovered", s.recovered}};
    return j.dump(2) + "\n";
}

void write_instance(const std::filesystem::path& dir, const SynthesisResult& r, const HarnessConfig& config) {
    namespace fs = std::filesystem;
    const fs::path staging = dir.string() + ".tmp";
    fs::remove_all(staging);
    fs::create_directories(staging);

    json meta = {{"path_ref", r.path_ref},
                 {"status", r.status == SynthesisStatus::Completed ? "completed" : "aborted"},
                 {"outcome", r.outcome ? json(to_string(*r.outcome)) : json(nullptr)},
                 {"used_cycles", r.budget.used_cycles},
                 {"tool_calls", r.budget.tool_calls},
                 {"max_cycles", config.max_cycles},
                 {"max_tool_calls", config.max_tool_calls},
                 {"retried", r.retried}};
    if (!r.abort_reason.empty()) meta["abort_reason"] = r.abort_reason;
    if (r.report) {
        meta["oracle"] = {{"passed", r.report->oracle.passed},
                          {"exit_code", r.report->oracle.exit_code},
                          {"timed_out", r.report->oracle.timed_out}};
        meta["rubric"] = rubric_json(r.report->rubric);
    }

    if (r.instance && r.outcome && *r.outcome != OutcomeClass::Failed) {
        auto put = [&](const fs::path& file, const std::string& content) {
            fs::create_directories(file.parent_path());
            atomic_write_file(file, content);
        };
        auto put_tree = [&](const char* sub, const FileManifest& files) {
            fs::create_directories(staging / sub);
            for (const auto& [p, c] : files) {
                if (!is_safe_relative_path(p)) throw DataError("unsafe instance path: " + p);
                put(staging / sub / p, c);
            }
        };
        put(staging / "instruction.md", r.instance->instruction);
        put(staging / "environment.txt", r.instance->env_spec);
        put_tree("snapshot", r.instance->snapshot);
        put_tree("tests", r.instance->verify_scripts);
        put_tree("solution", r.instance->oracle_solution);
    }
    atomic_write_file(staging / "meta.json", meta.dump(2) + "\n");

    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    fs::rename(staging, dir);
}

std::string audit_to_json_lines(const std::vector<json>& audit) {
    std::string out;
    for (const auto& ev : audit) out += ev.dump() + "\n";
    return out;
}

} // namespace skillsynth
