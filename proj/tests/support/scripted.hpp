#pragma once

#include <algorithm>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "skillsynth/errors.hpp"
#include "skillsynth/harness.hpp"

namespace testsupport {

enum class Script {
    Pass,            // good instance on the first cycle
    RecoverCycle2,   // broken test on cycle 1, fixed on cycle 2
    RubricFail,      // oracle always passes, rubric always rejects
    AlwaysFail,      // test script always exits 1
    Adversary,       // never finishes, keeps issuing tool calls
};

inline skillsynth::Path one_step_path(const std::string& tag = "a") {
    skillsynth::Path p;
    p.scenarios = {"s_from_" + tag, "s_to_" + tag};
    p.skills = {"k_" + tag};
    p.scenario_texts = {"greeting file absent", "greeting file written"};
    p.skill_names = {"write greeting " + tag};
    return p;
}

class ScriptedPlanner : public skillsynth::Planner {
public:
    skillsynth::TaskPlan plan(const skillsynth::Path& path, const skillsynth::ProviderOptions&) override {
        skillsynth::TaskPlan p;
        p.path_ref = skillsynth::path_ref(path);
        p.sub_objectives = {"Use " + path.skill_names[0] + " so that out.txt holds hello"};
        p.expected_outputs = {path.scenario_texts[1]};
        return p;
    }
};

class ThrowingPlanner : public skillsynth::Planner {
public:
    skillsynth::TaskPlan plan(const skillsynth::Path&, const skillsynth::ProviderOptions&) override {
        throw skillsynth::ProviderError("planner offline");
    }
};

/// Five tool calls per cycle, then finish. Tracks the largest cycle and
/// call index it was ever asked about.
class ScriptedConstructor : public skillsynth::Constructor {
public:
    explicit ScriptedConstructor(Script s) : script_(s) {}

    nlohmann::json step(const nlohmann::json& req) override {
        const auto cycle = req.at("cycle").get<std::size_t>();
        const auto call = req.at("call_index").get<std::size_t>();
        {
            std::lock_guard lock(mu_);
            max_cycle = std::max(max_cycle, cycle);
            max_call_index = std::max(max_call_index, call);
            ++requests;
        }
        if (script_ == Script::Adversary) {
            // alternate between a real tool and garbage
            if (call % 2 == 0) return {{"tool", "list_files"}, {"args", nlohmann::json::object()}};
            return {{"tool", "no_such_tool"}, {"args", {{"x", call}}}};
        }
        const bool broken = script_ == Script::AlwaysFail || (script_ == Script::RecoverCycle2 && cycle == 1);
        switch (call) {
            case 0: return write("instruction.md", "Create out.txt in the working directory holding the word hello.\n");
            case 1: return write("environment.txt", "base: debian:bookworm-slim\n");
            case 2: return write("snapshot/README.md", "empty workspace\n");
            case 3: return write("solution/solve.sh", "#!/bin/sh\necho hello > out.txt\n");
            case 4:
                return write("tests/test.sh", broken ? "#!/bin/sh\necho 'expected hullo'\nexit 1\n"
                                                     : "#!/bin/sh\n[ \"$(cat out.txt)\" = hello ]\n");
            default: return {{"tool", "finish"}, {"args", nlohmann::json::object()}};
        }
    }

    std::size_t max_cycle = 0;
    std::size_t max_call_index = 0;
    std::size_t requests = 0;

private:
    static nlohmann::json write(const std::string& path, const std::string& content) {
        return {{"tool", "write_file"}, {"args", {{"path", path}, {"content", content}}}};
    }
    Script script_;
    std::mutex mu_;
};

class ScriptedRubric : public skillsynth::RubricJudge {
public:
    explicit ScriptedRubric(bool accept) : accept_(accept) {}
    skillsynth::RubricVerdict judge(const skillsynth::TaskInstance&, const std::string&) override {
        if (accept_) return {true, true, {}};
        return {false, true, {"tests check a file the instruction never mentions"}};
    }

private:
    bool accept_;
};

} // namespace testsupport
