#include "skillsynth/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include <yaml-cpp/yaml.h>

#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/prompts.hpp"

namespace skillsynth {

using nlohmann::json;

std::string ProviderConfig::kind_for(const std::string& role) const {
    const auto it = overrides.find(role);
    return it != overrides.end() ? it->second : kind;
}

namespace {

std::string where(const YAML::Node& n, const std::string& key) {
    const auto m = n.Mark();
    return key + (m.line >= 0 ? " (line " + std::to_string(m.line + 1) + ")" : "");
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!node) return;
    if (!node.IsMap()) throw ConfigError(where(node, path.empty() ? "config" : path) + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError(where(kv.first, path.empty() ? key : path + "." + key) + ": unknown key");
    }
}

template <class T>
void read(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    const auto n = parent[key];
    if (!n || n.IsNull()) return;
    try {
        out = n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where(n, path + "." + key) + ": invalid value '" + YAML::Dump(n) + "'");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

void check_kind(const std::string& kind, const std::string& path) {
    if (kind != "mock" && kind != "http" && kind != "failing") {
        throw ConfigError(path + ": unknown provider kind '" + kind + "' (mock, http or failing)");
    }
}

} // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (!root || root.IsNull()) throw ConfigError("config is empty");
    check_keys(root, "", {"work_dir", "prompts_dir", "inputs", "providers", "stages"});

    PipelineConfig cfg;
    std::string s;
    read(root, "work_dir", "", s);
    if (s.empty()) throw ConfigError("work_dir is required");
    cfg.work_dir = resolve(base_dir, s);
    s.clear();
    read(root, "prompts_dir", "", s);
    cfg.prompts_dir = s.empty() ? default_prompts_dir() : resolve(base_dir, s);

    const auto inputs = root["inputs"];
    check_keys(inputs, "inputs", {"skills_dir", "trajectories"});
    if (inputs) {
        s.clear();
        read(inputs, "skills_dir", "inputs", s);
        cfg.skills_dir = resolve(base_dir, s);
        s.clear();
        read(inputs, "trajectories", "inputs", s);
        cfg.trajectories = resolve(base_dir, s);
    }

    auto& pc = cfg.providers;
    const auto prov = root["providers"];
    check_keys(prov, "providers",
               {"kind", "overrides", "endpoint", "api_key", "api_key_env", "timeout_s", "max_in_flight", "retries",
                "backoff_ms", "align_threshold", "embed_dim"});
    if (prov) {
        read(prov, "kind", "providers", pc.kind);
        read(prov, "endpoint", "providers", pc.endpoint);
        read(prov, "api_key", "providers", pc.api_key);
        read(prov, "api_key_env", "providers", pc.api_key_env);
        long long timeout = pc.timeout.count(), backoff = pc.retry.base_backoff.count();
        read(prov, "timeout_s", "providers", timeout);
        read(prov, "backoff_ms", "providers", backoff);
        pc.timeout = std::chrono::seconds(timeout);
        pc.retry.base_backoff = std::chrono::milliseconds(backoff);
        read(prov, "retries", "providers", pc.retry.retries);
        read(prov, "max_in_flight", "providers", pc.max_in_flight);
        read(prov, "align_threshold", "providers", pc.align_threshold);
        read(prov, "embed_dim", "providers", pc.embed_dim);
        if (const auto ov = prov["overrides"]) {
            check_keys(ov, "providers.overrides",
                       {"embed", "filter", "infer", "align", "merge", "triple", "plan", "construct", "rubric", "segment"});
            for (const auto& kv : ov) pc.overrides[kv.first.as<std::string>()] = kv.second.as<std::string>();
        }
    }
    check_kind(pc.kind, "providers.kind");
    for (const auto& [role, kind] : pc.overrides) check_kind(kind, "providers.overrides." + role);
    if (pc.retry.retries < 0) throw ConfigError("providers.retries must be >= 0");
    if (pc.embed_dim <= 0) throw ConfigError("providers.embed_dim must be positive");
    if (!pc.api_key_env.empty()) {
        if (const char* env = std::getenv(pc.api_key_env.c_str()); env && *env) pc.api_key = env;
    }
    const bool any_http = pc.kind == "http" || std::any_of(pc.overrides.begin(), pc.overrides.end(),
                                                           [](const auto& kv) { return kv.second == "http"; });
    if (any_http && pc.endpoint.empty()) throw ConfigError("providers.endpoint is required for http providers");

    const auto stages = root["stages"];
    if (!stages) throw ConfigError("stages section is required (every stage needs a seed)");
    check_keys(stages, "stages",
               {"ingest", "filter", "infer", "dedup", "align", "freeze", "sample", "synth", "stats", "diversity"});
    for (const char* name : kStageNames) {
        const auto st = stages[name];
        const std::string path = std::string("stages.") + name;
        if (!st || !st["seed"] || st["seed"].IsNull()) throw ConfigError(path + ".seed is required");
        std::uint64_t seed = 0;
        read(st, "seed", path, seed);
        cfg.seeds[name] = seed;
    }

    check_keys(stages["ingest"], "stages.ingest", {"seed"});
    check_keys(stages["filter"], "stages.filter", {"seed"});
    check_keys(stages["infer"], "stages.infer", {"seed"});
    check_keys(stages["freeze"], "stages.freeze", {"seed"});
    check_keys(stages["stats"], "stages.stats", {"seed"});

    const auto dd = stages["dedup"];
    check_keys(dd, "stages.dedup", {"seed", "k_neighbors", "sim_floor", "distance_threshold", "embed_batch"});
    read(dd, "k_neighbors", "stages.dedup", cfg.dedup.k_neighbors);
    read(dd, "sim_floor", "stages.dedup", cfg.dedup.sim_floor);
    read(dd, "distance_threshold", "stages.dedup", cfg.dedup.distance_threshold);
    read(dd, "embed_batch", "stages.dedup", cfg.embed_batch);
    cfg.dedup.seed = cfg.seeds["dedup"];
    cfg.dedup.max_in_flight = pc.max_in_flight;
    if (cfg.dedup.distance_threshold < 0.0 || cfg.dedup.distance_threshold > 2.0) {
        throw ConfigError("stages.dedup.distance_threshold must be in [0, 2]");
    }

    const auto al = stages["align"];
    check_keys(al, "stages.align", {"seed", "top_k", "filter_triples"});
    read(al, "top_k", "stages.align", cfg.align_top_k);
    read(al, "filter_triples", "stages.align", cfg.filter_triples);

    const auto sp = stages["sample"];
    check_keys(sp, "stages.sample", {"seed", "l_min", "l_max", "budget", "max_accepted", "weighting"});
    read(sp, "l_min", "stages.sample", cfg.sample.min_length);
    read(sp, "l_max", "stages.sample", cfg.sample.max_length);
    read(sp, "budget", "stages.sample", cfg.sample.budget);
    read(sp, "max_accepted", "stages.sample", cfg.sample.max_accepted);
    std::string weighting = "inverse";
    read(sp, "weighting", "stages.sample", weighting);
    cfg.sample.weighting = weighting_from_string(weighting);
    cfg.sample.seed = cfg.seeds["sample"];
    cfg.sample.validate();

    const auto sy = stages["synth"];
    check_keys(sy, "stages.synth",
               {"seed", "max_cycles", "max_tool_calls", "timeout_s", "parallel", "max_paths", "retry_temperature",
                "temperature", "sandbox_root"});
    auto& h = cfg.harness;
    read(sy, "max_cycles", "stages.synth", h.max_cycles);
    read(sy, "max_tool_calls", "stages.synth", h.max_tool_calls);
    long long synth_timeout = 300;
    read(sy, "timeout_s", "stages.synth", synth_timeout);
    h.timeout = std::chrono::seconds(synth_timeout);
    read(sy, "parallel", "stages.synth", cfg.synth_parallel);
    read(sy, "max_paths", "stages.synth", cfg.synth_max_paths);
    read(sy, "temperature", "stages.synth", h.options.temperature);
    if (sy && sy["retry_temperature"] && !sy["retry_temperature"].IsNull()) {
        double t = 0.0;
        read(sy, "retry_temperature", "stages.synth", t);
        cfg.retry_temperature = t;
    }
    s.clear();
    read(sy, "sandbox_root", "stages.synth", s);
    cfg.sandbox_root = s.empty() ? std::filesystem::temp_directory_path() : resolve(base_dir, s);
    h.options.seed = cfg.seeds["synth"];
    h.retry = pc.retry;
    if (h.max_cycles == 0) throw ConfigError("stages.synth.max_cycles must be >= 1");

    const auto dv = stages["diversity"];
    check_keys(dv, "stages.diversity", {"seed", "sample_size", "samples"});
    read(dv, "sample_size", "stages.diversity", cfg.diversity.sample_size);
    read(dv, "samples", "stages.diversity", cfg.diversity.samples);
    cfg.diversity.seed = cfg.seeds["diversity"];
    cfg.diversity.dedup = cfg.dedup;
    cfg.diversity.dedup.seed = cfg.seeds["diversity"];
    cfg.diversity.max_in_flight = pc.max_in_flight;
    cfg.diversity.retry = pc.retry;
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& file) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
    auto cfg = parse_config(read_file(file), std::filesystem::absolute(file).parent_path());
    return cfg;
}

PipelineConfig default_config(std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.prompts_dir = default_prompts_dir();
    cfg.sandbox_root = std::filesystem::temp_directory_path();
    for (const char* name : kStageNames) cfg.seeds[name] = seed;
    cfg.dedup.max_in_flight = cfg.providers.max_in_flight;
    cfg.diversity.dedup = cfg.dedup;
    cfg.diversity.max_in_flight = cfg.providers.max_in_flight;
    apply_seed_override(cfg, seed);
    return cfg;
}

void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed) {
    for (auto& [stage, s] : cfg.seeds) s = seed;
    cfg.dedup.seed = seed;
    cfg.sample.seed = seed;
    cfg.harness.options.seed = seed;
    cfg.diversity.seed = seed;
    cfg.diversity.dedup.seed = seed;
}

json stage_params(const PipelineConfig& cfg, const std::string& stage) {
    const auto& pc = cfg.providers;
    auto provider = [&](const std::string& role) {
        json p = {{"kind", pc.kind_for(role)}};
        if (pc.kind_for(role) == "http") p["endpoint"] = pc.endpoint;
        if (pc.kind_for(role) == "mock" && role == "align") p["threshold"] = pc.align_threshold;
        if (pc.kind_for(role) == "mock" && role == "embed") p["dim"] = pc.embed_dim;
        return p;
    };
    json j = {{"stage", stage}, {"seed", cfg.seed(stage)}};
    if (stage == "ingest") {
        j["skills_dir"] = cfg.skills_dir.string();
    } else if (stage == "filter") {
        j["provider"] = provider("filter");
    } else if (stage == "infer") {
        j["provider"] = provider("infer");
    } else if (stage == "dedup") {
        j["provider"] = provider("embed");
        j["k_neighbors"] = cfg.dedup.k_neighbors;
        j["sim_floor"] = cfg.dedup.sim_floor;
        j["distance_threshold"] = cfg.dedup.distance_threshold;
        j["embed_batch"] = cfg.embed_batch;
    } else if (stage == "align") {
        j["providers"] = {{"align", provider("align")}, {"merge", provider("merge")}, {"triple", provider("triple")}};
        j["top_k"] = cfg.align_top_k;
        j["filter_triples"] = cfg.filter_triples;
    } else if (stage == "sample") {
        j["l_min"] = cfg.sample.min_length;
        j["l_max"] = cfg.sample.max_length;
        j["budget"] = cfg.sample.budget;
        j["max_accepted"] = cfg.sample.max_accepted;
        j["weighting"] = to_string(cfg.sample.weighting);
    } else if (stage == "synth") {
        j["providers"] = {{"plan", provider("plan")}, {"construct", provider("construct")}, {"rubric", provider("rubric")}};
        j["max_cycles"] = cfg.harness.max_cycles;
        j["max_tool_calls"] = cfg.harness.max_tool_calls;
        j["timeout_ms"] = cfg.harness.timeout.count();
        j["max_paths"] = cfg.synth_max_paths;
        j["temperature"] = cfg.harness.options.temperature;
        j["retry_temperature"] = cfg.retry_temperature ? json(*cfg.retry_temperature) : json(nullptr);
    } else if (stage == "diversity") {
        j["providers"] = {{"segment", provider("segment")}, {"embed", provider("embed")}};
        j["trajectories"] = cfg.trajectories.string();
        j["sample_size"] = cfg.diversity.sample_size;
        j["samples"] = cfg.diversity.samples;
        j["k_neighbors"] = cfg.diversity.dedup.k_neighbors;
        j["sim_floor"] = cfg.diversity.dedup.sim_floor;
        j["distance_threshold"] = cfg.diversity.dedup.distance_threshold;
    }
    return j;
}

} // namespace skillsynth
