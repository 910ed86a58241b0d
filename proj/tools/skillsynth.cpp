// Command-line front end for the skill-graph pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "skillsynth/config.hpp"
#include "skillsynth/diversity.hpp"
#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/graph.hpp"
#include "skillsynth/pipeline.hpp"
#include "skillsynth/prompts.hpp"
#include "skillsynth/sampler.hpp"
#include "skillsynth/sandbox.hpp"

namespace fs = std::filesystem;
using namespace skillsynth;

namespace {

enum Exit { kOk = 0, kOther = 1, kData = 2, kProvider = 3, kConfig = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed_override;
    bool dry_run = false;
    bool force = false;
};

PipelineConfig config_from(const Common& c) {
    if (c.config.empty()) throw ConfigError("--config is required");
    auto cfg = load_config(c.config);
    if (c.seed_override) apply_seed_override(cfg, *c.seed_override);
    return cfg;
}

PipelineConfig config_or_default(const Common& c) {
    if (!c.config.empty()) return config_from(c);
    return default_config(c.seed_override.value_or(0));
}

void print_manifest(const StageManifest& m) {
    std::cout << m.stage << (m.memoized ? " (memoized)" : "") << ": " << m.outputs.size() << " output file(s)\n";
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "Pipeline configuration (YAML)");
    sub->add_option("--seed-override", c.seed_override, "Replace every stage seed");
    sub->add_flag("--dry-run", c.dry_run, "Check inputs and report what would run");
    sub->add_flag("--force", c.force, "Re-run even when a matching manifest exists");
}

void write_out(const fs::path& dir, const std::string& name, const std::string& content) {
    atomic_write_file(dir / name, content);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skill-graph construction, path sampling and task synthesis"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    Common common;
    std::vector<std::pair<std::string, CLI::App*>> plain;
    for (const char* stage : {"ingest", "filter", "infer", "dedup", "align", "freeze"}) {
        auto* sub = app.add_subcommand(stage, std::string("Run the ") + stage + " stage");
        add_common(sub, common);
        plain.emplace_back(stage, sub);
    }

    // sample
    auto* sample = app.add_subcommand("sample", "Sample workflow paths from the frozen graph");
    add_common(sample, common);
    std::optional<std::size_t> l_min, l_max, budget;
    std::optional<std::uint64_t> sample_seed;
    std::optional<std::string> weighting;
    std::string sample_graph, sample_out;
    sample->add_option("--l-min", l_min, "Minimum path length");
    sample->add_option("--l-max", l_max, "Maximum path length");
    sample->add_option("--budget", budget, "Number of walks");
    sample->add_option("--seed", sample_seed, "Sampler seed");
    sample->add_option("--weighting", weighting, "inverse or uniform")->check(CLI::IsMember({"inverse", "uniform"}));
    sample->add_option("--graph", sample_graph, "Graph file (standalone mode, no config)");
    sample->add_option("--out", sample_out, "Output directory (standalone mode)");

    // synth
    auto* synth = app.add_subcommand("synth", "Synthesize task instances from sampled paths");
    add_common(synth, common);
    std::string synth_paths, synth_out;
    std::optional<std::size_t> max_cycles, max_tool_calls, parallel;
    std::optional<double> retry_temperature;
    std::optional<long long> timeout_s;
    synth->add_option("--paths", synth_paths, "Paths file (standalone mode)");
    synth->add_option("--out", synth_out, "Output directory (standalone mode)");
    synth->add_option("--max-cycles", max_cycles, "Repair cycles per path");
    synth->add_option("--max-tool-calls", max_tool_calls, "Tool calls per cycle");
    synth->add_option("--parallel", parallel, "Paths synthesized concurrently");
    synth->add_option("--retry-temperature", retry_temperature, "Re-run failed paths at this temperature");
    synth->add_option("--timeout", timeout_s, "Sandbox timeout in seconds");

    // stats
    auto* stats = app.add_subcommand("stats", "Graph statistics and plot-ready histograms");
    add_common(stats, common);
    std::string stats_graph, stats_paths, stats_out;
    stats->add_option("--graph", stats_graph, "Graph file (standalone mode)");
    stats->add_option("--paths", stats_paths, "Optional paths file for the length histogram");
    stats->add_option("--out", stats_out, "Output directory (standalone mode)");

    // diversity
    auto* diversity = app.add_subcommand("diversity", "Trajectory diversity report, or compare reports");
    add_common(diversity, common);
    std::string div_trajs, div_out;
    std::optional<std::size_t> sample_size, samples;
    std::vector<std::string> compare;
    diversity->add_option("--trajectories", div_trajs, "Trajectories file (standalone mode)");
    diversity->add_option("--out", div_out, "Output directory (standalone and compare modes)");
    diversity->add_option("--sample-size", sample_size, "Trajectories per sample");
    diversity->add_option("--samples", samples, "Number of samples");
    diversity->add_option("--compare", compare, "label=report.json (repeat for each strategy)");

    auto* run_all_cmd = app.add_subcommand("run-all", "Run every stage in order");
    add_common(run_all_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");
    const RunOptions run_opts{common.dry_run, common.force};

    try {
        for (const auto& [stage, sub] : plain) {
            if (sub->parsed()) {
                print_manifest(run_stage(stage, config_from(common), run_opts));
                return kOk;
            }
        }

        if (sample->parsed()) {
            auto cfg = config_or_default(common);
            if (l_min) cfg.sample.min_length = *l_min;
            if (l_max) cfg.sample.max_length = *l_max;
            if (budget) cfg.sample.budget = *budget;
            if (sample_seed) cfg.sample.seed = *sample_seed;
            if (weighting) cfg.sample.weighting = weighting_from_string(*weighting);
            cfg.sample.validate();
            if (!sample_graph.empty()) {
                if (sample_out.empty()) throw ConfigError("--out is required with --graph");
                const FrozenGraph fg(load_graph(sample_graph));
                const auto res = sample_paths(fg, cfg.sample);
                const auto cov = coverage_report(res.paths);
                write_out(sample_out, "paths.jsonl", paths_to_json_lines(res.paths));
                write_out(sample_out, "coverage.json", coverage_to_json(cov));
                write_out(sample_out, "coverage.csv", coverage_to_csv(cov));
                std::cout << res.paths.size() << " paths from " << res.attempts << " walks, coverage entropy "
                          << cov.entropy << "\n";
                return kOk;
            }
            cfg.seeds["sample"] = cfg.sample.seed;
            print_manifest(run_stage("sample", cfg, run_opts));
            return kOk;
        }

        if (synth->parsed()) {
            auto cfg = config_or_default(common);
            if (max_cycles) cfg.harness.max_cycles = *max_cycles;
            if (max_tool_calls) cfg.harness.max_tool_calls = *max_tool_calls;
            if (parallel) cfg.synth_parallel = *parallel;
            if (retry_temperature) cfg.retry_temperature = *retry_temperature;
            if (timeout_s) cfg.harness.timeout = std::chrono::seconds(*timeout_s);
            if (cfg.harness.max_cycles == 0) throw ConfigError("--max-cycles must be >= 1");
            if (!synth_paths.empty()) {
                if (synth_out.empty()) throw ConfigError("--out is required with --paths");
                const auto paths = paths_from_json_lines(read_file(synth_paths), synth_paths);
                ProviderSet providers(cfg, cfg.harness.options);
                TempDirExecutor executor(cfg.sandbox_root);
                auto hc = cfg.harness;
                hc.rubric_template = load_prompt("rubric", cfg.prompts_dir);
                const auto results =
                    synthesize_all(paths, {providers.planner(), providers.constructor(), providers.rubric(), executor},
                                   hc, cfg.synth_parallel, cfg.retry_temperature);
                write_synthesis_outputs(synth_out, results, hc);
                std::cout << outcome_summary_to_json(outcome_summary(results));
                return kOk;
            }
            print_manifest(run_stage("synth", cfg, run_opts));
            return kOk;
        }

        if (stats->parsed()) {
            if (!stats_graph.empty()) {
                if (stats_out.empty()) throw ConfigError("--out is required with --graph");
                const auto g = load_graph(stats_graph);
                std::vector<Path> paths;
                if (!stats_paths.empty()) paths = paths_from_json_lines(read_file(stats_paths), stats_paths);
                const auto rep = emit_stats(g, paths);
                write_out(stats_out, "graph_stats.json", rep.graph_stats.dump(2) + "\n");
                write_out(stats_out, "degree_histogram.csv", rep.degree_csv);
                write_out(stats_out, "component_sizes.csv", rep.components_csv);
                write_out(stats_out, "path_lengths.csv", rep.path_lengths_csv);
                std::cout << rep.graph_stats.dump(2) << "\n";
                return kOk;
            }
            print_manifest(run_stage("stats", config_from(common), run_opts));
            return kOk;
        }

        if (diversity->parsed()) {
            if (!compare.empty()) {
                if (div_out.empty()) throw ConfigError("--out is required with --compare");
                std::vector<std::pair<std::string, DiversityReport>> reports;
                for (const auto& spec : compare) {
                    const auto eq = spec.find('=');
                    if (eq == std::string::npos || eq == 0) throw ConfigError("--compare expects label=report.json");
                    reports.emplace_back(spec.substr(0, eq), diversity_report_from_json(read_file(spec.substr(eq + 1))));
                }
                const auto rows = compare_strategies(reports);
                write_out(div_out, "comparison.json", comparison_to_json(rows));
                write_out(div_out, "comparison.csv", comparison_to_csv(rows));
                std::cout << comparison_to_csv(rows);
                return kOk;
            }
            auto cfg = config_or_default(common);
            if (sample_size) cfg.diversity.sample_size = *sample_size;
            if (samples) cfg.diversity.samples = *samples;
            if (!div_trajs.empty()) {
                if (div_out.empty()) throw ConfigError("--out is required with --trajectories");
                const auto trajs = trajectories_from_json_lines(read_file(div_trajs), div_trajs);
                ProviderSet providers(cfg, {0.0, cfg.seed("diversity")});
                const DiversityPrompts prompts{load_prompt("trajectory_analysis", cfg.prompts_dir),
                                               load_prompt("embed_scenario", cfg.prompts_dir),
                                               load_prompt("embed_skill", cfg.prompts_dir)};
                const auto rep = diversity_report(trajs, cfg.diversity, providers.extractor(), providers.embedder(), prompts);
                write_out(div_out, "diversity_report.json", diversity_report_to_json(rep));
                write_out(div_out, "diversity_report.csv", diversity_report_to_csv(rep));
                std::cout << diversity_report_to_csv(rep);
                return kOk;
            }
            print_manifest(run_stage("diversity", cfg, run_opts));
            return kOk;
        }

        if (run_all_cmd->parsed()) {
            for (const auto& m : run_all(config_from(common), run_opts)) print_manifest(m);
            return kOk;
        }
    } catch (const DataError& e) {
        spdlog::error("data error: {}", e.what());
        return kData;
    } catch (const ProviderError& e) {
        spdlog::error("provider error: {}", e.what());
        return kProvider;
    } catch (const ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return kConfig;
    } catch (const InfraError& e) {
        spdlog::error("infrastructure error: {}", e.what());
        return kOther;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kOther;
    }
    return kOk;
}
