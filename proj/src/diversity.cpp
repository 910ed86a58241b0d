#include "skillsynth/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "skillsynth/digest.hpp"
#include "skillsynth/errors.hpp"
#include "skillsynth/json_lines.hpp"
#include "skillsynth/parallel.hpp"
#include "skillsynth/prompts.hpp"
#include "skillsynth/rng.hpp"

namespace skillsynth {

using nlohmann::json;

namespace {

std::size_t word_count(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n;
}

std::string derived_id(const Trajectory& t) {
    json j = {{"goal", t.goal}, {"steps", json::array()}};
    for (const auto& s : t.steps) j["steps"].push_back({s.observation, s.action});
    return stable_id("t_", {j.dump()});
}

} // namespace

std::vector<Trajectory> trajectories_from_json_lines(std::string_view text, std::string_view source_name) {
    std::vector<Trajectory> out;
    for_each_json_line(text, source_name, [&](const json& rec, std::size_t line) {
        const auto where = std::string(source_name) + ":" + std::to_string(line);
        Trajectory t;
        try {
            t.goal = rec.value("goal", std::string{});
            for (const auto& s : rec.at("steps")) {
                t.steps.push_back({s.at("observation").get<std::string>(), s.at("action").get<std::string>()});
            }
            t.id = rec.value("id", std::string{});
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        }
        if (t.steps.empty()) throw DataError(where + ": trajectory has no steps");
        if (t.id.empty()) t.id = derived_id(t);
        out.push_back(std::move(t));
    });
    return out;
}

std::string render_trajectory(const Trajectory& t) {
    std::string out;
    if (!t.goal.empty()) out += "GOAL: " + t.goal + "\n";
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        out += "[" + std::to_string(i) + "] OBSERVATION: " + t.steps[i].observation + "\n";
        out += "[" + std::to_string(i) + "] ACTION: " + t.steps[i].action + "\n";
    }
    return out;
}

SegmentedTrajectory parse_segments(std::string_view text, std::size_t step_count) {
    const auto open = text.find('[');
    const auto close = text.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw DataError("extractor output contains no JSON array");
    }
    json arr;
    try {
        arr = json::parse(text.substr(open, close - open + 1));
    } catch (const json::parse_error& e) {
        throw DataError(std::string("extractor output is not valid JSON: ") + e.what());
    }
    if (!arr.is_array() || arr.empty()) throw DataError("extractor output must be a non-empty array");

    SegmentedTrajectory out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        const auto where = "segment " + std::to_string(i) + ": ";
        Segment s;
        try {
            const auto& range = e.at("step_range");
            if (!range.is_array() || range.size() != 2) throw DataError(where + "step_range must have two entries");
            const auto a = range[0].get<long long>();
            const auto b = range[1].get<long long>();
            if (a < 0 || b < a || static_cast<std::size_t>(b) >= step_count) {
                throw DataError(where + "step_range [" + std::to_string(a) + ", " + std::to_string(b) +
                                "] out of bounds for " + std::to_string(step_count) + " steps");
            }
            s.start = static_cast<std::size_t>(a);
            s.end = static_cast<std::size_t>(b);
            s.scenario = e.at("scenario").get<std::string>();
            s.skill = e.at("skill").get<std::string>();
        } catch (const json::exception& ex) {
            throw DataError(where + ex.what());
        }
        if (!out.segments.empty() && s.start <= out.segments.back().end) {
            throw DataError(where + "ranges overlap or are out of order");
        }
        for (const auto* txt : {&s.scenario, &s.skill}) {
            const auto n = word_count(*txt);
            if (n == 0) throw DataError(where + "empty description");
            if (n > kMaxSegmentWords) throw DataError(where + "description exceeds 15 words");
        }
        out.segments.push_back(std::move(s));
    }
    return out;
}

std::optional<SegmentedTrajectory> segment(const Trajectory& t, SegmentExtractor& extractor,
                                           const std::string& prompt_template, const RetryPolicy& retry,
                                           std::string* error) {
    const auto prompt = render_template(prompt_template, {{"observation_action_sequence", render_trajectory(t)}});
    std::string err;
    for (int ask = 0; ask < 2; ++ask) {
        const auto raw = with_retries(retry, [&] { return extractor.extract(t, prompt); }, &err);
        if (!raw) break;  // provider down: re-asking will not help
        try {
            return parse_segments(*raw, t.steps.size());
        } catch (const DataError& e) {
            err = e.what();
        }
    }
    if (error) *error = err;
    return std::nullopt;
}

DiversityPrompts DiversityPrompts::load_default() {
    return {load_prompt("trajectory_analysis"), load_prompt("embed_scenario"), load_prompt("embed_skill")};
}

namespace {

// Distinct texts, embedded and deduplicated; returns text -> canonical id.
std::map<std::string, std::string> canonical_ids(const std::set<std::string>& texts, std::string_view prefix,
                                                 Embedder& embedder, const std::string& instruction,
                                                 const DedupParams& dedup) {
    std::map<std::string, std::string> out;
    if (texts.empty()) return out;
    std::vector<std::string> ids, ordered(texts.begin(), texts.end());
    for (const auto& t : ordered) ids.push_back(stable_id(prefix, {t}));
    const auto rows = embedder.embed(ordered, instruction);
    if (rows.rows() != static_cast<Eigen::Index>(ordered.size())) {
        throw ProviderError("embedder returned a wrong number of rows");
    }
    const EmbeddingTable table(ids, rows);
    table.require_unit_rows();
    const auto res = deduplicate(table, dedup);
    for (std::size_t i = 0; i < ordered.size(); ++i) out[ordered[i]] = res.assignment.canonical_of.at(ids[i]);
    return out;
}

} // namespace

DiversityReport diversity_report(const std::vector<Trajectory>& input, const DiversityParams& params,
                                 SegmentExtractor& extractor, Embedder& embedder, const DiversityPrompts& prompts) {
    DiversityReport rep;
    rep.sample_count = params.samples;
    rep.sample_size = params.sample_size;
    if (input.empty() || params.samples == 0) {
        rep.sample_size = 0;
        rep.per_sample.assign(params.samples, {});
        return rep;
    }
    if (input.size() < params.sample_size) {
        spdlog::warn("diversity: only {} trajectories, clamping sample size {} -> {}", input.size(), params.sample_size,
                     input.size());
        rep.sample_size = input.size();
    }

    std::vector<const Trajectory*> trajs;
    for (const auto& t : input) trajs.push_back(&t);
    std::stable_sort(trajs.begin(), trajs.end(), [](const Trajectory* a, const Trajectory* b) {
        return a->id != b->id ? a->id < b->id : render_trajectory(*a) < render_trajectory(*b);
    });

    Rng rng(params.seed);
    std::vector<std::vector<std::size_t>> picks(params.samples);
    std::vector<char> needed(trajs.size(), 0);
    for (auto& pick : picks) {
        std::vector<std::size_t> idx(trajs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (rep.sample_size < idx.size()) {
            rng.shuffle(idx);
            idx.resize(rep.sample_size);
            std::sort(idx.begin(), idx.end());
        }
        for (auto i : idx) needed[i] = 1;
        pick = std::move(idx);
    }

    std::vector<std::optional<SegmentedTrajectory>> segs(trajs.size());
    parallel_for(trajs.size(), params.max_in_flight, [&](std::size_t i) {
        if (!needed[i]) return;
        std::string err;
        segs[i] = segment(*trajs[i], extractor, prompts.analysis, params.retry, &err);
        if (!segs[i]) spdlog::warn("diversity: skipping trajectory {}: {}", trajs[i]->id, err);
    });
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (needed[i] && !segs[i]) ++rep.skipped;
    }

    for (const auto& pick : picks) {
        SampleCounts c;
        c.trajectories = pick.size();
        std::set<std::string> scenarios, skills;
        std::set<std::pair<std::string, std::string>> raw;
        for (auto i : pick) {
            if (!segs[i]) {
                ++c.skipped;
                continue;
            }
            for (const auto& s : segs[i]->segments) {
                scenarios.insert(s.scenario);
                skills.insert(s.skill);
                raw.insert({s.scenario, s.skill});
            }
        }
        const auto scen_canon = canonical_ids(scenarios, "s_", embedder, prompts.scenario_instruction, params.dedup);
        const auto skill_canon = canonical_ids(skills, "k_", embedder, prompts.skill_instruction, params.dedup);
        std::set<std::string> us, uk;
        std::set<std::pair<std::string, std::string>> pairs;
        for (const auto& [t, id] : scen_canon) us.insert(id);
        for (const auto& [t, id] : skill_canon) uk.insert(id);
        for (const auto& [s, k] : raw) pairs.insert({scen_canon.at(s), skill_canon.at(k)});
        c.unique_scenarios = us.size();
        c.unique_skills = uk.size();
        c.unique_pairs = pairs.size();
        c.raw_pairs = raw.size();
        rep.per_sample.push_back(c);
    }

    const auto n = static_cast<double>(rep.per_sample.size());
    for (const auto& c : rep.per_sample) {
        rep.mean_scenarios += static_cast<double>(c.unique_scenarios) / n;
        rep.mean_skills += static_cast<double>(c.unique_skills) / n;
        rep.mean_pairs += static_cast<double>(c.unique_pairs) / n;
    }
    return rep;
}

std::string diversity_report_to_json(const DiversityReport& r) {
    json samples = json::array();
    for (const auto& c : r.per_sample) {
        samples.push_back({{"trajectories", c.trajectories},
                           {"skipped", c.skipped},
                           {"unique_scenarios", c.unique_scenarios},
                           {"unique_skills", c.unique_skills},
                           {"unique_pairs", c.unique_pairs},
                           {"raw_pairs", c.raw_pairs}});
    }
    const json j = {{"sample_size", r.sample_size},
                    {"sample_count", r.sample_count},
                    {"skipped", r.skipped},
                    {"mean", {{"unique_scenarios", r.mean_scenarios}, {"unique_skills", r.mean_skills}, {"unique_pairs", r.mean_pairs}}},
                    {"samples", samples}};
    return j.dump(2) + "\n";
}

DiversityReport diversity_report_from_json(std::string_view text) {
    DiversityReport r;
    try {
        const auto j = json::parse(text);
        r.sample_size = j.at("sample_size").get<std::size_t>();
        r.sample_count = j.at("sample_count").get<std::size_t>();
        r.skipped = j.value("skipped", std::size_t{0});
        const auto& m = j.at("mean");
        r.mean_scenarios = m.at("unique_scenarios").get<double>();
        r.mean_skills = m.at("unique_skills").get<double>();
        r.mean_pairs = m.at("unique_pairs").get<double>();
        for (const auto& s : j.at("samples")) {
            SampleCounts c;
            c.trajectories = s.at("trajectories").get<std::size_t>();
            c.skipped = s.at("skipped").get<std::size_t>();
            c.unique_scenarios = s.at("unique_scenarios").get<std::size_t>();
            c.unique_skills = s.at("unique_skills").get<std::size_t>();
            c.unique_pairs = s.at("unique_pairs").get<std::size_t>();
            c.raw_pairs = s.value("raw_pairs", std::size_t{0});
            r.per_sample.push_back(c);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("diversity report: ") + e.what());
    }
    return r;
}

std::string diversity_report_to_csv(const DiversityReport& r) {
    std::ostringstream out;
    out << "sample,trajectories,skipped,unique_scenarios,unique_skills,unique_pairs,raw_pairs\n";
    for (std::size_t i = 0; i < r.per_sample.size(); ++i) {
        const auto& c = r.per_sample[i];
        out << i << ',' << c.trajectories << ',' << c.skipped << ',' << c.unique_scenarios << ',' << c.unique_skills
            << ',' << c.unique_pairs << ',' << c.raw_pairs << '\n';
    }
    out << "mean,,," << r.mean_scenarios << ',' << r.mean_skills << ',' << r.mean_pairs << ",\n";
    return out.str();
}

std::vector<StrategyRatio> compare_strategies(const std::vector<std::pair<std::string, DiversityReport>>& reports) {
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const auto& a = reports[0].second;
        const auto& b = reports[i].second;
        if (a.sample_size != b.sample_size || a.sample_count != b.sample_count) {
            throw ConfigError("cannot compare '" + reports[0].first + "' and '" + reports[i].first +
                              "': sampling parameters differ");
        }
    }
    std::vector<StrategyRatio> out;
    for (const auto& [na, ra] : reports) {
        for (const auto& [nb, rb] : reports) {
            if (na == nb) continue;
            StrategyRatio row{na, nb, ra.mean_pairs, rb.mean_pairs, std::nullopt};
            if (rb.mean_pairs > 0.0) row.ratio = ra.mean_pairs / rb.mean_pairs;
            out.push_back(std::move(row));
        }
    }
    return out;
}

std::string comparison_to_json(const std::vector<StrategyRatio>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"numerator", r.numerator},
                       {"denominator", r.denominator},
                       {"numerator_pairs", r.numerator_pairs},
                       {"denominator_pairs", r.denominator_pairs},
                       {"ratio", r.ratio ? json(*r.ratio) : json(nullptr)}});
    }
    return arr.dump(2) + "\n";
}

std::string comparison_to_csv(const std::vector<StrategyRatio>& rows) {
    std::ostringstream out;
    out << "numerator,denominator,numerator_pairs,denominator_pairs,ratio\n";
    for (const auto& r : rows) {
        out << r.numerator << ',' << r.denominator << ',' << r.numerator_pairs << ',' << r.denominator_pairs << ',';
        if (r.ratio) out << *r.ratio;
        out << '\n';
    }
    return out.str();
}

} // namespace skillsynth
