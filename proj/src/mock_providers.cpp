#include "skillsynth/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "skillsynth/digest.hpp"

namespace skillsynth {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kStopwords = {
    "a",  "an",   "the", "of", "with", "and", "to", "in",   "on",   "for",  "is",   "are",
    "has", "have", "be", "by", "at",   "from", "its", "it", "that", "this", "into",
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains(const std::string& hay, std::string_view needle) { return hay.find(needle) != std::string::npos; }

std::string first_words(std::string_view text, std::size_t n) {
    std::istringstream in{std::string(text)};
    std::string out, w;
    for (std::size_t i = 0; i < n && in >> w; ++i) out += (out.empty() ? "" : " ") + w;
    return out;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

} // namespace

std::set<std::string> content_tokens(std::string_view text) {
    std::set<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !kStopwords.count(cur)) out.insert(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) cur += static_cast<char>(std::tolower(c));
        else flush();
    }
    flush();
    return out;
}

EmbeddingMatrix MockEmbedder::embed(const std::vector<std::string>& texts, const std::string&) {
    EmbeddingMatrix m = EmbeddingMatrix::Zero(static_cast<Eigen::Index>(texts.size()), dim_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto tokens = content_tokens(texts[i]);
        if (tokens.empty()) tokens.insert(texts[i]);
        for (const auto& t : tokens) {
            const auto h = hash64(t);
            const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
            m(static_cast<Eigen::Index>(i), bucket) += (h >> 63) ? -1.0f : 1.0f;
        }
        auto row = m.row(static_cast<Eigen::Index>(i));
        const float n = row.norm();
        if (n > 0.0f) row /= n;
        else row(0) = 1.0f;  // opposite-sign collisions cancelled out
    }
    return m;
}

FilterDecision MockSkillFilter::judge(const SkillSpec& skill) {
    const auto body = lower(skill.body);
    if (contains(body, "exfiltrate") || contains(body, "reverse shell") || contains(body, "--no-preserve-root")) {
        return {false, RejectReason::AdversarialContent};
    }
    if (contains(body, "powershell") || contains(body, ".exe") || contains(body, "windows only")) {
        return {false, RejectReason::NotLinuxExecutable};
    }
    if (!contains(body, "```")) return {false, RejectReason::NoStructuredWorkflow};
    if (contains(body, "nondeterministic") || contains(body, "manual inspection")) {
        return {false, RejectReason::NotVerifiable};
    }
    return {true, std::nullopt};
}

InferredScenarios MockScenarioInferrer::infer(const SkillSpec& skill) {
    InferredScenarios out;
    std::vector<std::string>* section = nullptr;
    std::istringstream in(skill.body);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("#", 0) == 0) {
            const auto heading = lower(line);
            if (contains(heading, "precondition")) section = &out.pre;
            else if (contains(heading, "postcondition")) section = &out.post;
            else section = nullptr;
            continue;
        }
        if (!section) continue;
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos || (line[b] != '-' && line[b] != '*')) continue;
        auto text = line.substr(b + 1);
        text.erase(0, text.find_first_not_of(" \t"));
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
        if (!text.empty()) section->push_back(text);
    }
    return out;
}

JudgeVerdict MockCompatibilityJudge::judge(const AlignmentQuery& q) {
    std::ostringstream why;
    why << "similarity " << q.similarity << (q.similarity >= threshold_ ? " >= " : " < ") << threshold_;
    return {q.similarity >= threshold_, why.str(), "mock"};
}

std::string MockScenarioMerger::merge(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    return *std::min_element(texts.begin(), texts.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
}

JudgeVerdict MockTripleJudge::judge(const TripleQuery& q) {
    if (q.key.src == q.key.dst) return {false, "skill leaves the scenario unchanged", "mock"};
    return {true, "transition accepted", "mock"};
}

TaskPlan MockPlanner::plan(const Path& path, const ProviderOptions&) {
    TaskPlan p;
    p.path_ref = path_ref(path);
    for (std::size_t i = 0; i < path.skills.size(); ++i) {
        p.sub_objectives.push_back("Use " + path.skill_names[i] + " to go from '" + path.scenario_texts[i] + "' to '" +
                                   path.scenario_texts[i + 1] + "'");
        p.expected_outputs.push_back(path.scenario_texts[i + 1]);
    }
    return p;
}

json MockConstructor::step(const json& request) {
    const auto& plan = request.at("plan");
    const auto objectives = plan.at("sub_objectives").get<std::vector<std::string>>();
    const auto outputs = plan.value("expected_outputs", std::vector<std::string>{});
    const auto call = request.at("call_index").get<std::size_t>();

    auto write = [](std::string path, std::string content) {
        return json{{"tool", "write_file"}, {"args", {{"path", std::move(path)}, {"content", std::move(content)}}}};
    };
    switch (call) {
        case 0: {
            std::string text = "# Task\n\nWork through the objectives below in order, inside the working directory.\n"
                               "For objective N, create out/step_N.txt holding the objective text as its only line.\n\n";
            for (std::size_t i = 0; i < objectives.size(); ++i) text += std::to_string(i + 1) + ". " + objectives[i] + "\n";
            if (!outputs.empty()) {
                text += "\nExpected end states:\n";
                for (const auto& o : outputs) text += "- " + o + "\n";
            }
            return write("instruction.md", text);
        }
        case 1: return write("environment.txt", "base: debian:bookworm-slim\npackages: coreutils\n");
        case 2:
            return write("snapshot/README.md",
                         "Scratch workspace for task " + plan.value("path_ref", std::string{}) + ".\n");
        case 3: {
            std::string sh = "#!/bin/sh\nset -e\nmkdir -p out\n";
            for (std::size_t i = 0; i < objectives.size(); ++i) {
                sh += "printf '%s\\n' " + shell_quote(objectives[i]) + " > out/step_" + std::to_string(i + 1) + ".txt\n";
            }
            return write("solution/solve.sh", sh);
        }
        case 4: {
            std::string sh = "#!/bin/sh\n";
            for (std::size_t i = 0; i < objectives.size(); ++i) {
                const auto file = "out/step_" + std::to_string(i + 1) + ".txt";
                sh += "[ \"$(cat " + file + " 2>/dev/null)\" = " + shell_quote(objectives[i]) + " ] || { echo \"" + file +
                      " missing or wrong\"; exit 1; }\n";
            }
            sh += "echo ok\n";
            return write("tests/test_outputs.sh", sh);
        }
        case 5: return {{"tool", "run_command"}, {"args", {{"command", "sh solution/solve.sh && sh tests/test_outputs.sh"}}}};
        default: return {{"tool", "finish"}, {"args", json::object()}};
    }
}

RubricVerdict MockRubricJudge::judge(const TaskInstance&, const std::string&) { return {true, true, {}}; }

std::string MockSegmentExtractor::extract(const Trajectory& t, const std::string&) {
    json arr = json::array();
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        arr.push_back({{"step_range", {i, i}},
                       {"scenario", first_words(t.steps[i].observation, kMaxSegmentWords)},
                       {"skill", first_words(t.steps[i].action, kMaxSegmentWords)}});
    }
    return arr.dump();
}

} // namespace skillsynth
