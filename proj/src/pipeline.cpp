#include "skillsynth/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "skillsynth/alignment.hpp"
#include "skillsynth/clustering.hpp"
#include "skillsynth/digest.hpp"
#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/http_providers.hpp"
#include "skillsynth/ingest.hpp"
#include "skillsynth/mock_providers.hpp"
#include "skillsynth/prompts.hpp"
#include "skillsynth/sampler.hpp"
#include "skillsynth/sandbox.hpp"

namespace skillsynth {

namespace fs = std::filesystem;
using nlohmann::json;

json StageManifest::to_json() const {
    return {{"stage", stage},     {"inputs", inputs},     {"outputs", outputs},
            {"params", params},   {"wall_clock_s", wall_clock_s}, {"memoized", memoized}};
}

StageManifest StageManifest::from_json(const json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    m.params = j.at("params");
    m.wall_clock_s = j.value("wall_clock_s", 0.0);
    m.memoized = j.value("memoized", false);
    return m;
}

// ---------------------------------------------------------------------------
// providers

struct ProviderSet::Impl {
    MockEmbedder mock_embedder;
    MockSkillFilter mock_filter;
    MockScenarioInferrer mock_inferrer;
    MockCompatibilityJudge mock_align;
    MockScenarioMerger mock_merger;
    MockTripleJudge mock_triple;
    MockPlanner mock_planner;
    MockConstructor mock_constructor;
    MockRubricJudge mock_rubric;
    MockSegmentExtractor mock_extractor;
    FailingProvider failing;
    std::unique_ptr<HttpProvider> http;
    const ProviderConfig* config;

    Impl(const PipelineConfig& cfg, const ProviderOptions& options)
        : mock_embedder(cfg.providers.embed_dim), mock_align(cfg.providers.align_threshold), config(&cfg.providers) {
        bool any_http = cfg.providers.kind == "http";
        for (const auto& [role, kind] : cfg.providers.overrides) any_http = any_http || kind == "http";
        if (any_http) {
            http = std::make_unique<HttpProvider>(
                HttpEndpoint{cfg.providers.endpoint, cfg.providers.api_key, cfg.providers.timeout, options, cfg.prompts_dir});
        }
    }

    template <class I, class M>
    I& pick(const char* role, M& mock) {
        const auto kind = config->kind_for(role);
        if (kind == "http") return *http;
        if (kind == "failing") return failing;
        return mock;
    }
};

ProviderSet::ProviderSet(const PipelineConfig& cfg, const ProviderOptions& options)
    : impl_(std::make_unique<Impl>(cfg, options)) {}
ProviderSet::~ProviderSet() = default;

Embedder& ProviderSet::embedder() { return impl_->pick<Embedder>("embed", impl_->mock_embedder); }
SkillFilter& ProviderSet::filter() { return impl_->pick<SkillFilter>("filter", impl_->mock_filter); }
ScenarioInferrer& ProviderSet::inferrer() { return impl_->pick<ScenarioInferrer>("infer", impl_->mock_inferrer); }
CompatibilityJudge& ProviderSet::align_judge() { return impl_->pick<CompatibilityJudge>("align", impl_->mock_align); }
ScenarioMerger& ProviderSet::merger() { return impl_->pick<ScenarioMerger>("merge", impl_->mock_merger); }
TripleJudge& ProviderSet::triple_judge() { return impl_->pick<TripleJudge>("triple", impl_->mock_triple); }
Planner& ProviderSet::planner() { return impl_->pick<Planner>("plan", impl_->mock_planner); }
Constructor& ProviderSet::constructor() { return impl_->pick<Constructor>("construct", impl_->mock_constructor); }
RubricJudge& ProviderSet::rubric() { return impl_->pick<RubricJudge>("rubric", impl_->mock_rubric); }
SegmentExtractor& ProviderSet::extractor() { return impl_->pick<SegmentExtractor>("segment", impl_->mock_extractor); }

// ---------------------------------------------------------------------------
// helpers

std::map<std::string, std::string> digest_tree(const fs::path& root, const fs::path& base) {
    std::map<std::string, std::string> out;
    if (fs::is_regular_file(root)) {
        out[fs::relative(root, base).generic_string()] = sha256_file(root);
        return out;
    }
    if (!fs::is_directory(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), base).generic_string()] = sha256_file(e.path());
    }
    return out;
}

namespace {

std::string csv_histogram(const char* header, const std::map<std::size_t, std::size_t>& hist) {
    std::ostringstream out;
    out << header << '\n';
    for (const auto& [k, v] : hist) out << k << ',' << v << '\n';
    return out.str();
}

struct Input {
    std::string name;        // manifest key
    fs::path path;
    std::string producer;    // upstream stage, empty for external inputs
    bool optional = false;
};

struct StageContext {
    const PipelineConfig& cfg;
    fs::path out;  // staging directory
    ProviderOptions options;

    fs::path work(const std::string& name) const { return cfg.work_dir / name; }
    void write(const std::string& name, std::string_view content) const { atomic_write_file(out / name, content); }
};

struct StageDef {
    std::vector<Input> inputs;
    std::vector<std::string> outputs;  // top-level entries under work_dir
    std::function<void(StageContext&)> run;
};

SkillGraph load(const StageContext& ctx, const char* name) { return load_graph(ctx.work(name)); }

std::vector<Path> load_paths(const fs::path& file) {
    return paths_from_json_lines(read_file(file), file.filename().string());
}

StageDef stage_def(const std::string& stage, const PipelineConfig& cfg) {
    const auto& pc = cfg.providers;
    auto wd = [&](const char* name) { return cfg.work_dir / name; };

    if (stage == "ingest") {
        return {{{"skills_dir", cfg.skills_dir, "", false}}, {"skills.jsonl"}, [](StageContext& ctx) {
                    const auto skills = ingest_skill_directory(ctx.cfg.skills_dir);
                    spdlog::info("ingest: {} skills", skills.size());
                    ctx.write("skills.jsonl", skills_to_json_lines(skills));
                }};
    }
    if (stage == "filter") {
        return {{{"skills.jsonl", wd("skills.jsonl"), "ingest"}}, {"filtered_skills.jsonl"}, [&pc](StageContext& ctx) {
                    auto skills = skills_from_json_lines(read_file(ctx.work("skills.jsonl")), "skills.jsonl");
                    ProviderSet providers(ctx.cfg, ctx.options);
                    skills = filter_skills(std::move(skills), providers.filter(), pc.max_in_flight, pc.retry);
                    const auto kept = std::count_if(skills.begin(), skills.end(), [](const auto& k) { return k.retained(); });
                    spdlog::info("filter: retained {} of {}", kept, skills.size());
                    ctx.write("filtered_skills.jsonl", skills_to_json_lines(skills));
                }};
    }
    if (stage == "infer") {
        return {{{"filtered_skills.jsonl", wd("filtered_skills.jsonl"), "filter"}}, {"graph_raw.jsonl"},
                [&pc](StageContext& ctx) {
                    const auto skills =
                        skills_from_json_lines(read_file(ctx.work("filtered_skills.jsonl")), "filtered_skills.jsonl");
                    ProviderSet providers(ctx.cfg, ctx.options);
                    auto g = infer_scenarios(skills, providers.inferrer(), pc.max_in_flight, pc.retry);
                    spdlog::info("infer: {} scenarios, {} transitions", g.scenarios().size(), g.transitions().size());
                    ctx.write("graph_raw.jsonl", to_json_lines(g));
                }};
    }
    if (stage == "dedup") {
        return {{{"graph_raw.jsonl", wd("graph_raw.jsonl"), "infer"}},
                {"graph_dedup.jsonl", "dedup_assignment.csv", "scenario_embeddings.bin"},
                [](StageContext& ctx) {
                    auto g = load(ctx, "graph_raw.jsonl");
                    ProviderSet providers(ctx.cfg, ctx.options);
                    embed_scenarios(g, providers.embedder(), load_prompt("embed_graph_scenario", ctx.cfg.prompts_dir),
                                    ctx.cfg.embed_batch);
                    const auto table = graph_embeddings(g);
                    const auto res = deduplicate(table, ctx.cfg.dedup);
                    const auto out = canonicalize(g, res.assignment);
                    spdlog::info("dedup: {} scenarios -> {}", g.scenarios().size(), out.scenarios().size());
                    ctx.write("graph_dedup.jsonl", to_json_lines(out));
                    ctx.write("dedup_assignment.csv", assignment_to_csv(res.assignment));
                    write_embeddings_binary(table, ctx.out / "scenario_embeddings.bin");
                }};
    }
    if (stage == "align") {
        return {{{"graph_dedup.jsonl", wd("graph_dedup.jsonl"), "dedup"}},
                {"graph_aligned.jsonl", "aligned_pairs.csv", "align_summary.json"},
                [&pc](StageContext& ctx) {
                    const auto g = load(ctx, "graph_dedup.jsonl");
                    ProviderSet providers(ctx.cfg, ctx.options);
                    const AlignmentPrompts prompts{load_prompt("align_forward", ctx.cfg.prompts_dir),
                                                   load_prompt("align_reverse", ctx.cfg.prompts_dir)};
                    const auto aligned = bidirectional_align(
                        g, providers.align_judge(), {ctx.cfg.align_top_k, pc.max_in_flight, pc.retry}, prompts);
                    if (aligned.judged > 0 && aligned.undecided == aligned.judged) {
                        throw ProviderError("alignment judge unavailable: all " + std::to_string(aligned.judged) +
                                            " judgments undecided");
                    }
                    auto merged = merge_aligned(g, aligned.accepted, providers.merger(), pc.retry);
                    json summary = {{"judged", aligned.judged},
                                    {"undecided", aligned.undecided},
                                    {"accepted", aligned.accepted.size()},
                                    {"merged_groups", merged.merged_groups},
                                    {"failed_groups", merged.failed_groups}};
                    SkillGraph out = std::move(merged.graph);
                    if (ctx.cfg.filter_triples) {
                        auto filtered = filter_triples(out, providers.triple_judge(),
                                                       load_prompt("triple_filter", ctx.cfg.prompts_dir),
                                                       pc.max_in_flight, pc.retry);
                        summary["removed_triples"] = filtered.removed;
                        summary["unverified_triples"] = filtered.unverified;
                        out = std::move(filtered.graph);
                    }
                    spdlog::info("align: {} pairs accepted, {} groups merged", aligned.accepted.size(),
                                 summary["merged_groups"].get<std::size_t>());
                    ctx.write("graph_aligned.jsonl", to_json_lines(out));
                    ctx.write("aligned_pairs.csv", aligned_pairs_to_csv(aligned.accepted));
                    ctx.write("align_summary.json", summary.dump(2) + "\n");
                }};
    }
    if (stage == "freeze") {
        return {{{"graph_aligned.jsonl", wd("graph_aligned.jsonl"), "align"}}, {"graph.jsonl"}, [](StageContext& ctx) {
                    auto g = load(ctx, "graph_aligned.jsonl");
                    std::vector<std::string> ids;
                    for (const auto& [id, s] : g.scenarios()) ids.push_back(id);
                    for (const auto& id : ids) g.mutable_scenario(id).embedding.reset();
                    g.check_invariants();
                    g.freeze();
                    ctx.write("graph.jsonl", to_json_lines(g));
                }};
    }
    if (stage == "sample") {
        return {{{"graph.jsonl", wd("graph.jsonl"), "freeze"}},
                {"paths.jsonl", "coverage.json", "coverage.csv"},
                [](StageContext& ctx) {
                    const FrozenGraph fg(load(ctx, "graph.jsonl"));
                    const auto res = sample_paths(fg, ctx.cfg.sample);
                    spdlog::info("sample: {} paths accepted from {} walks", res.paths.size(), res.attempts);
                    const auto cov = coverage_report(res.paths);
                    ctx.write("paths.jsonl", paths_to_json_lines(res.paths));
                    ctx.write("coverage.json", coverage_to_json(cov));
                    ctx.write("coverage.csv", coverage_to_csv(cov));
                }};
    }
    if (stage == "synth") {
        return {{{"paths.jsonl", wd("paths.jsonl"), "sample"}},
                {"instances", "audit", "outcome_summary.json"},
                [](StageContext& ctx) {
                    auto paths = load_paths(ctx.work("paths.jsonl"));
                    if (ctx.cfg.synth_max_paths > 0 && paths.size() > ctx.cfg.synth_max_paths) {
                        paths.resize(ctx.cfg.synth_max_paths);
                    }
                    ProviderSet providers(ctx.cfg, ctx.options);
                    TempDirExecutor executor(ctx.cfg.sandbox_root);
                    auto hc = ctx.cfg.harness;
                    hc.rubric_template = load_prompt("rubric", ctx.cfg.prompts_dir);
                    const auto results = synthesize_all(
                        paths, {providers.planner(), providers.constructor(), providers.rubric(), executor}, hc,
                        ctx.cfg.synth_parallel, ctx.cfg.retry_temperature);
                    write_synthesis_outputs(ctx.out, results, hc);
                }};
    }
    if (stage == "stats") {
        return {{{"graph.jsonl", wd("graph.jsonl"), "freeze"}, {"paths.jsonl", wd("paths.jsonl"), "sample", true}},
                {"stats"},
                [](StageContext& ctx) {
                    const auto g = load(ctx, "graph.jsonl");
                    std::vector<Path> paths;
                    if (fs::exists(ctx.work("paths.jsonl"))) paths = load_paths(ctx.work("paths.jsonl"));
                    const auto rep = emit_stats(g, paths);
                    fs::create_directories(ctx.out / "stats");
                    ctx.write("stats/graph_stats.json", rep.graph_stats.dump(2) + "\n");
                    ctx.write("stats/degree_histogram.csv", rep.degree_csv);
                    ctx.write("stats/component_sizes.csv", rep.components_csv);
                    ctx.write("stats/path_lengths.csv", rep.path_lengths_csv);
                }};
    }
    if (stage == "diversity") {
        if (cfg.trajectories.empty()) throw ConfigError("inputs.trajectories is required for the diversity stage");
        return {{{"trajectories", cfg.trajectories, "", false}},
                {"diversity_report.json", "diversity_report.csv"},
                [](StageContext& ctx) {
                    const auto trajs = trajectories_from_json_lines(read_file(ctx.cfg.trajectories),
                                                                    ctx.cfg.trajectories.filename().string());
                    ProviderSet providers(ctx.cfg, ctx.options);
                    const DiversityPrompts prompts{load_prompt("trajectory_analysis", ctx.cfg.prompts_dir),
                                                   load_prompt("embed_scenario", ctx.cfg.prompts_dir),
                                                   load_prompt("embed_skill", ctx.cfg.prompts_dir)};
                    const auto rep =
                        diversity_report(trajs, ctx.cfg.diversity, providers.extractor(), providers.embedder(), prompts);
                    ctx.write("diversity_report.json", diversity_report_to_json(rep));
                    ctx.write("diversity_report.csv", diversity_report_to_csv(rep));
                }};
    }
    throw ConfigError("unknown stage '" + stage + "'");
}

std::optional<StageManifest> read_manifest(const fs::path& file) {
    if (!fs::exists(file)) return std::nullopt;
    try {
        return StageManifest::from_json(json::parse(read_file(file)));
    } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable manifest {}: {}", file.string(), e.what());
        return std::nullopt;
    }
}

bool outputs_intact(const StageManifest& m, const fs::path& work_dir) {
    for (const auto& [rel, digest] : m.outputs) {
        const auto p = work_dir / rel;
        if (!fs::is_regular_file(p) || sha256_file(p) != digest) return false;
    }
    return true;
}

} // namespace

StageManifest run_stage(const std::string& stage, const PipelineConfig& cfg, const RunOptions& options) {
    auto def = stage_def(stage, cfg);

    StageManifest m;
    m.stage = stage;
    m.params = stage_params(cfg, stage);
    for (const auto& in : def.inputs) {
        if (!fs::exists(in.path)) {
            if (in.optional) continue;
            if (in.producer.empty()) throw DataError("stage '" + stage + "': input not found: " + in.path.string());
            throw DataError("stage '" + stage + "' needs " + in.name + "; run '" + in.producer + "' first");
        }
        if (fs::is_directory(in.path)) {
            for (const auto& [rel, d] : digest_tree(in.path, in.path)) m.inputs[in.name + "/" + rel] = d;
        } else {
            m.inputs[in.name] = sha256_file(in.path);
        }
    }

    const auto manifest_file = cfg.work_dir / "manifests" / (stage + ".json");
    if (!options.force) {
        if (auto prev = read_manifest(manifest_file);
            prev && prev->params == m.params && prev->inputs == m.inputs && outputs_intact(*prev, cfg.work_dir)) {
            prev->memoized = true;
            spdlog::info("{}: inputs and parameters unchanged, skipping", stage);
            return *prev;
        }
    }
    if (options.dry_run) {
        spdlog::info("{}: would run ({} inputs)", stage, m.inputs.size());
        return m;
    }

    const auto started = std::chrono::steady_clock::now();
    const auto staging = cfg.work_dir / ".staging" / stage;
    fs::remove_all(staging);
    fs::create_directories(staging);
    StageContext ctx{cfg, staging, ProviderOptions{cfg.harness.options.temperature, cfg.seed(stage)}};
    try {
        def.run(ctx);
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }

    for (const auto& name : def.outputs) {
        const auto src = staging / name;
        if (!fs::exists(src)) throw InfraError("stage '" + stage + "' did not produce " + name);
        const auto dst = cfg.work_dir / name;
        fs::remove_all(dst);
        fs::create_directories(dst.parent_path());
        fs::rename(src, dst);
        for (auto& [rel, d] : digest_tree(dst, cfg.work_dir)) m.outputs[rel] = d;
    }
    fs::remove_all(staging);
    std::error_code ec;
    fs::remove(cfg.work_dir / ".staging", ec);  // only succeeds once empty

    m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    atomic_write_file(manifest_file, m.to_json().dump(2) + "\n");
    return m;
}

std::vector<StageManifest> run_all(const PipelineConfig& cfg, const RunOptions& options) {
    std::vector<StageManifest> out;
    for (const char* stage : kStageNames) {
        if (std::string_view(stage) == "diversity" && cfg.trajectories.empty()) {
            spdlog::info("diversity: no trajectories configured, skipping");
            continue;
        }
        spdlog::info("== {} ==", stage);
        out.push_back(run_stage(stage, cfg, options));
    }
    return out;
}

StatsReport emit_stats(const SkillGraph& g, const std::vector<Path>& paths) {
    StatsReport r;
    const auto s = compute_stats(g);
    r.graph_stats = {{"node_count", s.node_count},
                     {"transition_count", s.transition_count},
                     {"skill_count", g.skills().size()},
                     {"roles",
                      {{"source_only", s.roles.source_only},
                       {"sink_only", s.roles.sink_only},
                       {"bridge", s.roles.bridge},
                       {"isolated", s.roles.isolated}}},
                     {"degree", {{"mean", s.degree.mean}, {"median", s.degree.median}, {"max", s.degree.max}}},
                     {"component_count", s.components.size()},
                     {"giant_fraction", s.giant_fraction},
                     {"path_count", paths.size()}};

    std::map<std::size_t, std::size_t> degree, comps, lengths;
    for (auto d : degree_sequence(g)) ++degree[d];
    for (auto c : s.components) ++comps[c];
    for (const auto& p : paths) ++lengths[p.length()];
    r.degree_csv = csv_histogram("degree,count", degree);
    r.components_csv = csv_histogram("size,count", comps);
    r.path_lengths_csv = csv_histogram("length,count", lengths);
    return r;
}

void write_synthesis_outputs(const fs::path& dir, const std::vector<SynthesisResult>& results,
                             const HarnessConfig& config) {
    fs::create_directories(dir / "instances");
    fs::create_directories(dir / "audit");
    for (std::size_t i = 0; i < results.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%04zu", i);
        write_instance(dir / "instances" / name, results[i], config);
        atomic_write_file(dir / "audit" / (std::string(name) + ".jsonl"), audit_to_json_lines(results[i].audit));
    }
    const auto summary = outcome_summary(results);
    atomic_write_file(dir / "outcome_summary.json", outcome_summary_to_json(summary));
    spdlog::info("synth: {} all passed, {} oracle passed only, {} failed, {} aborted", summary.all_passed,
                 summary.oracle_passed_only, summary.failed, summary.aborted);
}

} // namespace skillsynth
