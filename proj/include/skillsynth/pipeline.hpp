#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillsynth/config.hpp"
#include "skillsynth/diversity.hpp"
#include "skillsynth/graph.hpp"
#include "skillsynth/harness.hpp"
#include "skillsynth/providers.hpp"

namespace skillsynth {

struct StageManifest {
    std::string stage;
    std::map<std::string, std::string> inputs;   // name -> sha256
    std::map<std::string, std::string> outputs;  // path relative to work_dir -> sha256
    nlohmann::json params;
    double wall_clock_s = 0.0;
    bool memoized = false;

    nlohmann::json to_json() const;
    static StageManifest from_json(const nlohmann::json& j);
};

/// Resolves every provider role to a mock, failing or HTTP implementation
/// according to the configuration.
class ProviderSet {
public:
    ProviderSet(const PipelineConfig& cfg, const ProviderOptions& options);
    ~ProviderSet();

    Embedder& embedder();
    SkillFilter& filter();
    ScenarioInferrer& inferrer();
    CompatibilityJudge& align_judge();
    ScenarioMerger& merger();
    TripleJudge& triple_judge();
    Planner& planner();
    Constructor& constructor();
    RubricJudge& rubric();
    SegmentExtractor& extractor();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RunOptions {
    bool dry_run = false;  // check inputs and report what would run; write nothing
    bool force = false;    // ignore memoized manifests
};

/// Runs one stage inside cfg.work_dir. Outputs are built in a staging
/// directory and renamed into place, then the manifest is written. A stage
/// whose parameters and input digests match its previous manifest (and whose
/// outputs are intact) is skipped and reported as memoized.
StageManifest run_stage(const std::string& stage, const PipelineConfig& cfg, const RunOptions& options = {});

/// Every stage in dependency order. The first failure propagates; manifests
/// of the stages that completed stay on disk.
std::vector<StageManifest> run_all(const PipelineConfig& cfg, const RunOptions& options = {});

/// sha256 of every regular file under `root` (or of `root` itself), keyed by
/// path relative to `base`.
std::map<std::string, std::string> digest_tree(const std::filesystem::path& root, const std::filesystem::path& base);

struct StatsReport {
    nlohmann::json graph_stats;
    std::string degree_csv;      // degree,count
    std::string components_csv;  // size,count
    std::string path_lengths_csv;  // length,count
};

StatsReport emit_stats(const SkillGraph& g, const std::vector<Path>& paths);

/// Writes a SynthesisResult batch as instances/<nnnn>/, audit/<nnnn>.jsonl
/// and outcome_summary.json under `dir`.
void write_synthesis_outputs(const std::filesystem::path& dir, const std::vector<SynthesisResult>& results,
                             const HarnessConfig& config);

} // namespace skillsynth
