#include "skillsynth/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skillsynth/errors.hpp"
#include "skillsynth/json_lines.hpp"

namespace skillsynth {

using nlohmann::json;

std::string_view to_string(Weighting w) { return w == Weighting::Uniform ? "uniform" : "inverse"; }

Weighting weighting_from_string(std::string_view s) {
    if (s == "inverse") return Weighting::InverseFrequency;
    if (s == "uniform") return Weighting::Uniform;
    throw ConfigError("unknown weighting '" + std::string(s) + "' (expected inverse or uniform)");
}

void PathConfig::validate() const {
    if (min_length < 1) throw ConfigError("l_min must be >= 1");
    if (min_length > max_length) {
        throw ConfigError("l_min (" + std::to_string(min_length) + ") exceeds l_max (" + std::to_string(max_length) + ")");
    }
}

CoverageCounters CoverageCounters::zeros(const FrozenGraph& g) {
    return {std::vector<std::uint64_t>(g.scenario_count(), 0), std::vector<std::uint64_t>(g.skill_count(), 0), {}};
}

WalkExclusions WalkExclusions::none(const FrozenGraph& g) {
    return {std::vector<char>(g.scenario_count(), 0), std::vector<char>(g.skill_count(), 0)};
}

namespace {
double weight_of(std::uint64_t count, Weighting w) {
    return w == Weighting::Uniform ? 1.0 : 1.0 / (static_cast<double>(count) + 1.0);
}
} // namespace

std::uint32_t sample_source(const FrozenGraph& g, const CoverageCounters& counters, Rng& rng, Weighting w) {
    if (g.scenario_count() == 0) throw DataError("cannot sample a source from an empty scenario set");
    std::vector<double> weights(g.scenario_count());
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = weight_of(counters.scenario_visits[i], w);
    return static_cast<std::uint32_t>(rng.weighted_index(weights));
}

std::vector<std::uint32_t> admissible_skills(const FrozenGraph& g, std::uint32_t at, const WalkExclusions& ex) {
    std::vector<std::uint32_t> out;
    for (const auto& e : g.out(at)) {
        if (ex.skills[e.skill] || ex.scenarios[e.dst]) continue;
        if (out.empty() || out.back() != e.skill) out.push_back(e.skill);  // edges are sorted by skill
    }
    return out;
}

std::optional<Step> sample_step(const FrozenGraph& g, std::uint32_t at, const CoverageCounters& counters,
                                const WalkExclusions& ex, Rng& rng, Weighting w) {
    const auto skills = admissible_skills(g, at, ex);
    if (skills.empty()) return std::nullopt;

    std::vector<double> weights(skills.size());
    for (std::size_t i = 0; i < skills.size(); ++i) weights[i] = weight_of(counters.skill_uses[skills[i]], w);
    const auto skill = skills[rng.weighted_index(weights)];

    std::vector<std::uint32_t> dsts;
    for (const auto& e : g.out(at)) {
        if (e.skill == skill && !ex.scenarios[e.dst]) dsts.push_back(e.dst);
    }
    weights.resize(dsts.size());
    for (std::size_t i = 0; i < dsts.size(); ++i) weights[i] = weight_of(counters.scenario_visits[dsts[i]], w);
    return Step{skill, dsts[rng.weighted_index(weights)]};
}

SampleResult sample_paths(const FrozenGraph& g, const PathConfig& config) {
    config.validate();
    SampleResult res;
    res.counters = CoverageCounters::zeros(g);
    if (g.scenario_count() == 0 || config.budget == 0) {
        res.attempts = config.budget;
        return res;
    }

    Rng rng(config.seed);
    auto ex = WalkExclusions::none(g);
    std::vector<std::uint32_t> scen, skills;
    for (std::size_t b = 0; b < config.budget; ++b) {
        if (config.max_accepted > 0 && res.paths.size() >= config.max_accepted) break;
        ++res.attempts;
        scen.assign(1, sample_source(g, res.counters, rng, config.weighting));
        skills.clear();
        ex.scenarios[scen[0]] = 1;
        while (skills.size() < config.max_length) {
            auto step = sample_step(g, scen.back(), res.counters, ex, rng, config.weighting);
            if (!step) break;
            skills.push_back(step->skill);
            scen.push_back(step->dst);
            ex.skills[step->skill] = 1;
            ex.scenarios[step->dst] = 1;
        }
        for (auto s : scen) ex.scenarios[s] = 0;
        for (auto k : skills) ex.skills[k] = 0;

        if (skills.size() < config.min_length) continue;
        auto key = skills;
        std::sort(key.begin(), key.end());
        if (!res.counters.skill_sets.insert(std::move(key)).second) continue;

        for (auto s : scen) ++res.counters.scenario_visits[s];
        for (auto k : skills) ++res.counters.skill_uses[k];
        Path p;
        for (auto s : scen) {
            p.scenarios.push_back(g.scenario_id(s));
            p.scenario_texts.push_back(g.scenario_text(s));
        }
        for (auto k : skills) {
            p.skills.push_back(g.skill_id(k));
            p.skill_names.push_back(g.skill_name(k));
        }
        res.paths.push_back(std::move(p));
    }
    return res;
}

std::map<std::pair<std::string, std::string>, double> CoverageReport::distribution() const {
    std::uint64_t total = 0;
    for (const auto& [pair, c] : counts) total += c;
    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& [pair, c] : counts) out[pair] = static_cast<double>(c) / static_cast<double>(total);
    return out;
}

CoverageReport coverage_report(const std::vector<Path>& paths) {
    CoverageReport r;
    std::uint64_t total = 0;
    for (const auto& p : paths) {
        for (std::size_t l = 0; l < p.skills.size(); ++l) {
            ++r.counts[{p.scenarios[l], p.skills[l]}];
            ++total;
        }
    }
    r.support = r.counts.size();
    if (r.support == 0) {
        r.entropy = 0.0;
    } else if (r.support == 1) {
        r.entropy = 1.0;
    } else {
        double h = 0.0;
        for (const auto& [pair, c] : r.counts) {
            const double p = static_cast<double>(c) / static_cast<double>(total);
            h -= p * std::log(p);
        }
        r.entropy = h / std::log(static_cast<double>(r.support));
    }
    return r;
}

std::string paths_to_json_lines(const std::vector<Path>& paths) {
    std::string out;
    for (const auto& p : paths) {
        json rec = {{"length", p.length()},
                    {"scenarios", p.scenarios},
                    {"skills", p.skills},
                    {"scenario_texts", p.scenario_texts},
                    {"skill_names", p.skill_names}};
        out += rec.dump() + "\n";
    }
    return out;
}

std::vector<Path> paths_from_json_lines(std::string_view text, std::string_view source_name) {
    std::vector<Path> out;
    for_each_json_line(text, source_name, [&](const json& rec, std::size_t line) {
        const auto where = std::string(source_name) + ":" + std::to_string(line);
        Path p;
        try {
            p.scenarios = rec.at("scenarios").get<std::vector<std::string>>();
            p.skills = rec.at("skills").get<std::vector<std::string>>();
            p.scenario_texts = rec.value("scenario_texts", p.scenarios);
            p.skill_names = rec.value("skill_names", p.skills);
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (p.scenarios.size() != p.skills.size() + 1 || p.scenario_texts.size() != p.scenarios.size() ||
            p.skill_names.size() != p.skills.size()) {
            throw DataError(where + ": path needs L skills and L + 1 scenarios");
        }
        out.push_back(std::move(p));
    });
    return out;
}

std::string coverage_to_json(const CoverageReport& r) {
    json pairs = json::array();
    for (const auto& [pair, c] : r.counts) pairs.push_back({{"scenario", pair.first}, {"skill", pair.second}, {"count", c}});
    json rec = {{"support", r.support}, {"entropy", r.entropy}, {"pairs", pairs}};
    return rec.dump(2) + "\n";
}

std::string coverage_to_csv(const CoverageReport& r) {
    std::ostringstream out;
    out << "scenario_id,skill_id,count\n";
    for (const auto& [pair, c] : r.counts) out << pair.first << ',' << pair.second << ',' << c << '\n';
    return out.str();
}

} // namespace skillsynth
