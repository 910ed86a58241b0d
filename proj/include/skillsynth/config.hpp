#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "skillsynth/clustering.hpp"
#include "skillsynth/diversity.hpp"
#include "skillsynth/harness.hpp"
#include "skillsynth/retry.hpp"
#include "skillsynth/sampler.hpp"

namespace skillsynth {

/// Pipeline stages in dependency order.
inline constexpr const char* kStageNames[] = {"ingest", "filter", "infer",     "dedup",  "align",
                                              "freeze", "sample", "synth", "stats", "diversity"};

/// Provider roles that can be configured independently.
inline constexpr const char* kProviderRoles[] = {"embed", "filter", "infer",     "align",  "merge",
                                                 "triple", "plan",  "construct", "rubric", "segment"};

struct ProviderConfig {
    std::string kind = "mock";  // mock | http | failing
    std::map<std::string, std::string> overrides;  // role -> kind
    std::string endpoint;
    std::string api_key;
    std::string api_key_env = "SKILLSYNTH_API_KEY";
    std::chrono::seconds timeout{60};
    std::size_t max_in_flight = 4;
    RetryPolicy retry;
    double align_threshold = 0.75;  // mock compatibility judge
    int embed_dim = 256;            // mock embedder

    std::string kind_for(const std::string& role) const;
};

struct PipelineConfig {
    std::filesystem::path work_dir;
    std::filesystem::path prompts_dir;
    std::filesystem::path skills_dir;
    std::filesystem::path trajectories;  // empty: the diversity stage has nothing to read
    ProviderConfig providers;

    std::map<std::string, std::uint64_t> seeds;  // one per stage

    DedupParams dedup;
    std::size_t embed_batch = 64;

    std::size_t align_top_k = 1000;
    bool filter_triples = true;

    PathConfig sample;

    HarnessConfig harness;
    std::size_t synth_parallel = 1;
    std::size_t synth_max_paths = 0;  // 0 means every sampled path
    std::optional<double> retry_temperature;
    std::filesystem::path sandbox_root;

    DiversityParams diversity;

    std::uint64_t seed(const std::string& stage) const { return seeds.at(stage); }
};

/// Parses the YAML configuration. Relative paths resolve against
/// `base_dir`. Unknown keys, missing stage seeds and ill-typed values raise
/// ConfigError. The API key is taken from the environment variable named by
/// providers.api_key_env when it is set.
PipelineConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& file);

/// Built-in defaults with every stage seed set to `seed` and mock
/// providers; used by the standalone CLI modes that take no config file.
PipelineConfig default_config(std::uint64_t seed = 0);

/// Replaces every stage seed.
void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed);

/// Parameters that determine a stage's output; the memoization key together
/// with the input digests. Credentials are never included.
nlohmann::json stage_params(const PipelineConfig& cfg, const std::string& stage);

} // namespace skillsynth
