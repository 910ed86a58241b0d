#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "skillsynth/graph.hpp"
#include "skillsynth/rng.hpp"

namespace skillsynth {

enum class Weighting {
    InverseFrequency,  // p ∝ (count + 1)^-1
    Uniform,           // baseline for comparison only
};

std::string_view to_string(Weighting w);
Weighting weighting_from_string(std::string_view s);

struct PathConfig {
    std::size_t min_length = 1;
    std::size_t max_length = 7;
    std::size_t budget = 0;  // walk attempts
    std::size_t max_accepted = 0;  // stop early once this many paths are accepted; 0 = no cap
    std::uint64_t seed = 0;
    Weighting weighting = Weighting::InverseFrequency;

    void validate() const;
};

/// Visit counts per scenario and usage counts per skill (indexed like the
/// FrozenGraph), plus the canonical skill sets already accepted.
struct CoverageCounters {
    std::vector<std::uint64_t> scenario_visits;
    std::vector<std::uint64_t> skill_uses;
    std::set<std::vector<std::uint32_t>> skill_sets;

    static CoverageCounters zeros(const FrozenGraph& g);
};

/// Scenarios and skills already on the current walk.
struct WalkExclusions {
    std::vector<char> scenarios;
    std::vector<char> skills;

    static WalkExclusions none(const FrozenGraph& g);
};

struct Step {
    std::uint32_t skill;
    std::uint32_t dst;
    bool operator==(const Step&) const = default;
};

/// Draws a source scenario with probability ∝ (visits + 1)^-1 (or uniformly).
std::uint32_t sample_source(const FrozenGraph& g, const CoverageCounters& counters, Rng& rng,
                            Weighting w = Weighting::InverseFrequency);

/// Distinct admissible skills out of `at` (not yet used on this walk and
/// with at least one unvisited destination), in index order.
std::vector<std::uint32_t> admissible_skills(const FrozenGraph& g, std::uint32_t at, const WalkExclusions& ex);

/// Draws the skill by inverse usage frequency, then its destination among
/// the skill's unvisited postconditions by inverse visit frequency. Returns
/// nullopt on a dead end.
std::optional<Step> sample_step(const FrozenGraph& g, std::uint32_t at, const CoverageCounters& counters,
                                const WalkExclusions& ex, Rng& rng, Weighting w = Weighting::InverseFrequency);

/// One accepted workflow path: L skills interleaved with L + 1 scenarios.
struct Path {
    std::vector<std::string> scenarios;
    std::vector<std::string> skills;
    std::vector<std::string> scenario_texts;
    std::vector<std::string> skill_names;

    std::size_t length() const { return skills.size(); }
    bool operator==(const Path&) const = default;
};

struct SampleResult {
    std::vector<Path> paths;  // in acceptance order
    CoverageCounters counters;
    std::size_t attempts = 0;
};

/// Inverse-frequency path sampling with monotone progression. Runs
/// config.budget walks (fewer if max_accepted is reached); a walk is accepted when its length is in range and its
/// skill set is new, and only then are the counters incremented.
SampleResult sample_paths(const FrozenGraph& g, const PathConfig& config);

struct CoverageReport {
    std::map<std::pair<std::string, std::string>, std::uint64_t> counts;  // (scenario, skill) -> occurrences
    std::size_t support = 0;
    double entropy = 0.0;  // normalized to [0, 1]

    std::map<std::pair<std::string, std::string>, double> distribution() const;
};

/// Tallies every (scenario, outgoing skill) step across `paths`. Entropy is
/// normalized by log(support); a support of one is reported as 1.0 and an
/// empty support as 0.0.
CoverageReport coverage_report(const std::vector<Path>& paths);

std::string paths_to_json_lines(const std::vector<Path>& paths);
std::vector<Path> paths_from_json_lines(std::string_view text, std::string_view source_name = "<paths>");

std::string coverage_to_json(const CoverageReport& r);
std::string coverage_to_csv(const CoverageReport& r);

} // namespace skillsynth
