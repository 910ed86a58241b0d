#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "skillsynth/diversity.hpp"
#include "skillsynth/harness.hpp"
#include "skillsynth/providers.hpp"

namespace skillsynth {

struct HttpEndpoint {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string api_key;   // sent as a bearer token when non-empty
    std::chrono::seconds timeout{60};
    ProviderOptions options;
    std::filesystem::path prompts_dir;  // plan and construct templates; empty for the built-in directory
};

/// JSON-over-HTTP provider. Each role POSTs to `<base_url>/<role>`:
///
///   embed      {texts, instruction}                 -> {embeddings: [[float]]}
///   filter     {skill: {id, name, source, body}}    -> {retained, reason?}
///   infer      {skill: {...}}                       -> {pre: [..], post: [..]}
///   align      {post, pre, similarity, direction, prompt} -> {compatible, rationale}
///   merge      {texts}                              -> {text}
///   triple     {src, skill, dst, prompt}            -> {compatible, rationale}
///   plan       {path, prompt}                       -> {sub_objectives, expected_outputs}
///   construct  <tool-loop request> + prompt         -> {tool, args}
///   rubric     {instruction, prompt}                -> {alignment_ok, self_contained_ok, reasons}
///   segment    {prompt}                             -> {text}
///
/// Every request also carries {temperature, seed}. Transport failures,
/// non-2xx statuses and malformed bodies raise ProviderError.
class HttpProvider : public Embedder,
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
    explicit HttpProvider(HttpEndpoint endpoint);

    EmbeddingMatrix embed(const std::vector<std::string>& texts, const std::string& instruction) override;
    std::string tag() const override;
    FilterDecision judge(const SkillSpec& skill) override;
    InferredScenarios infer(const SkillSpec& skill) override;
    JudgeVerdict judge(const AlignmentQuery& query) override;
    std::string merge(const std::vector<std::string>& texts) override;
    JudgeVerdict judge(const TripleQuery& query) override;
    TaskPlan plan(const Path& path, const ProviderOptions& options) override;
    nlohmann::json step(const nlohmann::json& request) override;
    RubricVerdict judge(const TaskInstance& instance, const std::string& prompt) override;
    std::string extract(const Trajectory& trajectory, const std::string& prompt) override;

    /// POSTs `body` to `<base_url>/<role>` and returns the parsed reply.
    nlohmann::json call(const std::string& role, nlohmann::json body) const;

private:
    HttpEndpoint endpoint_;
    std::string scheme_host_;
    std::string prefix_;
    std::string plan_template_;
    std::string construct_template_;
};

} // namespace skillsynth
