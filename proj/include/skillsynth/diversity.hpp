#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillsynth/clustering.hpp"
#include "skillsynth/providers.hpp"
#include "skillsynth/retry.hpp"

namespace skillsynth {

struct TrajectoryStep {
    std::string observation;
    std::string action;
};

struct Trajectory {
    std::string id;  // optional in the input; derived from content when absent
    std::string goal;
    std::vector<TrajectoryStep> steps;
};

std::vector<Trajectory> trajectories_from_json_lines(std::string_view text, std::string_view source_name = "<trajectories>");

/// Numbered observation/action listing used to fill the analysis prompt.
std::string render_trajectory(const Trajectory& t);

struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    std::string scenario;
    std::string skill;
    bool operator==(const Segment&) const = default;
};

struct SegmentedTrajectory {
    std::vector<Segment> segments;
};

inline constexpr std::size_t kMaxSegmentWords = 15;

/// Parses the extractor's JSON array (a surrounding ```json fence is
/// tolerated) and checks ranges are in bounds, ordered and non-overlapping
/// and that both texts are non-empty and at most 15 words. Throws DataError.
SegmentedTrajectory parse_segments(std::string_view text, std::size_t step_count);

class SegmentExtractor {
public:
    virtual ~SegmentExtractor() = default;
    /// Returns the raw model output for the rendered analysis prompt.
    virtual std::string extract(const Trajectory& trajectory, const std::string& prompt) = 0;
};

/// Asks once, re-asks once on invalid output, then gives up (nullopt, with
/// the reason in `error`).
std::optional<SegmentedTrajectory> segment(const Trajectory& t, SegmentExtractor& extractor,
                                           const std::string& prompt_template, const RetryPolicy& retry = {},
                                           std::string* error = nullptr);

struct DiversityPrompts {
    std::string analysis;
    std::string scenario_instruction;
    std::string skill_instruction;

    static DiversityPrompts load_default();
};

struct DiversityParams {
    std::size_t sample_size = 1000;
    std::size_t samples = 3;
    std::uint64_t seed = 0;
    DedupParams dedup;
    std::size_t max_in_flight = 1;
    RetryPolicy retry;
};

struct SampleCounts {
    std::size_t trajectories = 0;
    std::size_t skipped = 0;
    std::size_t unique_scenarios = 0;
    std::size_t unique_skills = 0;
    std::size_t unique_pairs = 0;
    std::size_t raw_pairs = 0;  // distinct (scenario text, skill text) before dedup
};

struct DiversityReport {
    std::size_t sample_size = 0;
    std::size_t sample_count = 0;
    std::vector<SampleCounts> per_sample;
    double mean_scenarios = 0.0;
    double mean_skills = 0.0;
    double mean_pairs = 0.0;
    std::size_t skipped = 0;  // trajectories that could not be segmented
};

/// Draws `samples` seeded subsets of `sample_size` trajectories (clamped to
/// the corpus size), segments them, deduplicates scenario and skill texts
/// separately and counts canonical scenarios, skills and pairs per subset.
/// Trajectories are ordered by id before sampling, so the input order does
/// not matter.
DiversityReport diversity_report(const std::vector<Trajectory>& trajs, const DiversityParams& params,
                                 SegmentExtractor& extractor, Embedder& embedder, const DiversityPrompts& prompts);

std::string diversity_report_to_json(const DiversityReport& r);
DiversityReport diversity_report_from_json(std::string_view text);
std::string diversity_report_to_csv(const DiversityReport& r);

struct StrategyRatio {
    std::string numerator;
    std::string denominator;
    double numerator_pairs = 0.0;
    double denominator_pairs = 0.0;
    std::optional<double> ratio;  // nullopt when the denominator mean is zero
};

/// Ratio of mean unique-pair counts for every ordered pair of distinct
/// labels. Refuses reports with different sampling parameters.
std::vector<StrategyRatio> compare_strategies(const std::vector<std::pair<std::string, DiversityReport>>& reports);

std::string comparison_to_json(const std::vector<StrategyRatio>& rows);
std::string comparison_to_csv(const std::vector<StrategyRatio>& rows);

} // namespace skillsynth
