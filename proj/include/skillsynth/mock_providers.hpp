#pragma once

#include <set>
#include <string>
#include <vector>

#include "skillsynth/diversity.hpp"
#include "skillsynth/harness.hpp"
#include "skillsynth/providers.hpp"

// Deterministic offline providers. They make the whole pipeline runnable
// without network access and give the tests known collision behavior.

namespace skillsynth {

/// Lowercased alphanumeric tokens with common English function words
/// removed, as a set.
std::set<std::string> content_tokens(std::string_view text);

/// Hashes each content token into one signed bucket and normalizes. Texts
/// with the same token set get identical vectors; otherwise cosine is about
/// |A ∩ B| / sqrt(|A| |B|). The instruction is ignored.
class MockEmbedder : public Embedder {
public:
    explicit MockEmbedder(int dim = 256) : dim_(dim) {}
    EmbeddingMatrix embed(const std::vector<std::string>& texts, const std::string& instruction) override;
    std::string tag() const override { return "mock-hash-" + std::to_string(dim_); }

private:
    int dim_;
};

/// Keyword screen over the skill body.
class MockSkillFilter : public SkillFilter {
public:
    FilterDecision judge(const SkillSpec& skill) override;
};

/// Reads the bullet lists under "## Preconditions" and "## Postconditions".
class MockScenarioInferrer : public ScenarioInferrer {
public:
    InferredScenarios infer(const SkillSpec& skill) override;
};

/// Compatible iff the retrieval similarity reaches the threshold.
class MockCompatibilityJudge : public CompatibilityJudge {
public:
    explicit MockCompatibilityJudge(double threshold = 0.75) : threshold_(threshold) {}
    JudgeVerdict judge(const AlignmentQuery& query) override;

private:
    double threshold_;
};

/// Keeps the shortest text (ties: lexicographically smallest).
class MockScenarioMerger : public ScenarioMerger {
public:
    std::string merge(const std::vector<std::string>& texts) override;
};

/// Rejects self-loops, accepts everything else.
class MockTripleJudge : public TripleJudge {
public:
    JudgeVerdict judge(const TripleQuery& query) override;
};

/// Every call throws ProviderError. Used to exercise failure handling.
class FailingProvider : public Embedder,
                        public SkillFilter,
                        public ScenarioInferrer,
                        public CompatibilityJudge,
                        public ScenarioMerger,
                        public TripleJudge,
                        public Planner,
                        public Constructor,
                        public RubricJudge,
                        public SegmentExtractor {
public:
    EmbeddingMatrix embed(const std::vector<std::string>&, const std::string&) override { fail(); }
    std::string tag() const override { return "failing"; }
    FilterDecision judge(const SkillSpec&) override { fail(); }
    InferredScenarios infer(const SkillSpec&) override { fail(); }
    JudgeVerdict judge(const AlignmentQuery&) override { fail(); }
    std::string merge(const std::vector<std::string>&) override { fail(); }
    JudgeVerdict judge(const TripleQuery&) override { fail(); }
    TaskPlan plan(const Path&, const ProviderOptions&) override { fail(); }
    nlohmann::json step(const nlohmann::json&) override { fail(); }
    RubricVerdict judge(const TaskInstance&, const std::string&) override { fail(); }
    std::string extract(const Trajectory&, const std::string&) override { fail(); }

private:
    [[noreturn]] static void fail() { throw ProviderError("provider configured to fail"); }
};

/// One sub-objective per skill, in path order.
class MockPlanner : public Planner {
public:
    TaskPlan plan(const Path& path, const ProviderOptions& options) override;
};

/// Writes a small shell task derived from the plan (one output file per
/// sub-objective), runs it once in the sandbox and finishes. Stateless: the
/// call index in the request selects the action.
class MockConstructor : public Constructor {
public:
    nlohmann::json step(const nlohmann::json& request) override;
};

class MockRubricJudge : public RubricJudge {
public:
    RubricVerdict judge(const TaskInstance& instance, const std::string& prompt) override;
};

/// One segment per step: the observation as scenario and the action as
/// skill, each cut to 15 words.
class MockSegmentExtractor : public SegmentExtractor {
public:
    std::string extract(const Trajectory& trajectory, const std::string& prompt) override;
};

} // namespace skillsynth
