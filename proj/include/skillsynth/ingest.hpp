#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillsynth/graph.hpp"
#include "skillsynth/providers.hpp"
#include "skillsynth/retry.hpp"

namespace skillsynth {

/// Reads every `<name>.md` in `dir` together with its `<name>.json` sidecar
/// ({"name": ..., "source": ...}). Skills come back sorted by id with a
/// Pending verdict.
std::vector<SkillSpec> ingest_skill_directory(const std::filesystem::path& dir);

std::string skills_to_json_lines(const std::vector<SkillSpec>& skills);
std::vector<SkillSpec> skills_from_json_lines(std::string_view text, std::string_view source_name = "<skills>");

/// Applies the filter to every skill. A skill the filter cannot decide after
/// retries fails the whole call with ProviderError.
std::vector<SkillSpec> filter_skills(std::vector<SkillSpec> skills, SkillFilter& filter, std::size_t max_in_flight = 1,
                                     const RetryPolicy& retry = {});

/// Builds the atomic-transition graph: for each retained skill, its inferred
/// preconditions and postconditions become scenarios and the cross product
/// becomes transitions. Rejected skills are left out.
SkillGraph infer_scenarios(const std::vector<SkillSpec>& skills, ScenarioInferrer& inferrer,
                           std::size_t max_in_flight = 1, const RetryPolicy& retry = {});

/// Embeds every scenario text of `g` in place (batched, id order).
void embed_scenarios(SkillGraph& g, Embedder& embedder, const std::string& instruction, std::size_t batch = 256);

} // namespace skillsynth
