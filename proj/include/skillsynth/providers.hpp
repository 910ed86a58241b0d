#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skillsynth/embedding.hpp"
#include "skillsynth/graph.hpp"

namespace skillsynth {

// Provider interfaces for graph construction. Every call may throw
// ProviderError; callers decide between retrying, failing open, or failing
// closed. Implementations must be safe to call from several threads.

/// Pass-through sampling parameters (e.g. a hotter retry batch).
struct ProviderOptions {
    double temperature = 0.0;
    std::uint64_t seed = 0;  // forwarded to providers that accept one
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Returns one unit-norm row per text. `instruction` is a query template
    /// with a {{{...}}} slot; implementations without instruction support
    /// ignore it.
    virtual EmbeddingMatrix embed(const std::vector<std::string>& texts, const std::string& instruction) = 0;
    virtual std::string tag() const = 0;
};

struct FilterDecision {
    bool retained = false;
    std::optional<RejectReason> reason;
};

class SkillFilter {
public:
    virtual ~SkillFilter() = default;
    virtual FilterDecision judge(const SkillSpec& skill) = 0;
};

struct InferredScenarios {
    std::vector<std::string> pre;
    std::vector<std::string> post;
};

class ScenarioInferrer {
public:
    virtual ~ScenarioInferrer() = default;
    virtual InferredScenarios infer(const SkillSpec& skill) = 0;
};

enum class AlignDirection { PostToPre, PreToPost };

std::string_view to_string(AlignDirection d);

struct AlignmentQuery {
    std::string post_id;
    std::string post_text;
    std::string pre_id;
    std::string pre_text;
    double similarity = 0.0;
    AlignDirection direction = AlignDirection::PostToPre;
    std::string prompt;  // rendered direction-specific template
};

struct JudgeVerdict {
    bool compatible = false;
    std::string rationale;
    std::string provider_tag;
};

class CompatibilityJudge {
public:
    virtual ~CompatibilityJudge() = default;
    virtual JudgeVerdict judge(const AlignmentQuery& query) = 0;
};

class ScenarioMerger {
public:
    virtual ~ScenarioMerger() = default;
    virtual std::string merge(const std::vector<std::string>& texts) = 0;
};

struct TripleQuery {
    TripleKey key;
    std::string src_text;
    std::string skill_name;
    std::string skill_body;
    std::string dst_text;
    std::string prompt;
};

class TripleJudge {
public:
    virtual ~TripleJudge() = default;
    virtual JudgeVerdict judge(const TripleQuery& query) = 0;
};

} // namespace skillsynth
