#pragma once

#include <string>
#include <vector>

#include "skillsynth/embedding.hpp"
#include "skillsynth/graph.hpp"
#include "skillsynth/providers.hpp"
#include "skillsynth/retry.hpp"

namespace skillsynth {

// Number of candidates retrieved per scenario in each alignment pass.
inline constexpr std::size_t kDefaultAlignTopK = 1000;

struct AlignmentCandidate {
    std::string post_id;
    std::string pre_id;
    double similarity = 0.0;
    AlignDirection direction = AlignDirection::PostToPre;
};

/// Top-K pool members by cosine similarity to `query_id`, descending, ties
/// broken by the smaller pool id. The query itself is never returned. For
/// PostToPre the query is the postcondition; for PreToPost it is the
/// precondition.
std::vector<AlignmentCandidate> retrieve_candidates(const std::string& query_id, const std::vector<std::string>& pool,
                                                    const EmbeddingTable& embeddings, std::size_t top_k,
                                                    AlignDirection direction);

/// Scenario embeddings stored on the graph, as a table in id order. Throws
/// DataError naming the first scenario without one.
EmbeddingTable graph_embeddings(const SkillGraph& g);

struct AlignedPair {
    std::string post_id;
    std::string pre_id;
    double similarity = 0.0;
    bool forward = false;  // accepted in the post -> pre pass
    bool reverse = false;  // accepted in the pre -> post pass
};

struct AlignParams {
    std::size_t top_k = kDefaultAlignTopK;
    std::size_t max_in_flight = 1;
    RetryPolicy retry;
};

struct AlignmentPrompts {
    std::string forward;
    std::string reverse;

    static AlignmentPrompts load_default();
};

struct AlignmentResult {
    std::vector<AlignedPair> accepted;  // sorted by (post_id, pre_id)
    std::size_t judged = 0;
    std::size_t undecided = 0;
};

/// Forward pass (each postcondition against its top-K preconditions) and
/// reverse pass (each precondition against its top-K postconditions). The
/// accepted set is the union of both passes, with per-pass provenance.
/// Judge calls that keep failing after retries are excluded and counted as
/// undecided.
AlignmentResult bidirectional_align(const SkillGraph& g, CompatibilityJudge& judge, const AlignParams& params,
                                    const AlignmentPrompts& prompts);

std::string aligned_pairs_to_csv(const std::vector<AlignedPair>& pairs);

struct MergeResult {
    SkillGraph graph;
    std::size_t merged_groups = 0;
    std::size_t failed_groups = 0;
};

/// Collapses each connected group of aligned scenarios into one Merged node
/// whose text comes from `merger`. Groups whose merge call fails stay
/// unmerged.
MergeResult merge_aligned(const SkillGraph& g, const std::vector<AlignedPair>& pairs, ScenarioMerger& merger,
                          const RetryPolicy& retry = {});

struct TripleFilterResult {
    SkillGraph graph;
    std::size_t removed = 0;
    std::size_t unverified = 0;  // judge failures, retained without the verified flag
};

/// Judges every (src, skill, dst) triple; rejected triples are dropped and
/// survivors judged compatible are marked verified.
TripleFilterResult filter_triples(const SkillGraph& g, TripleJudge& judge, const std::string& prompt_template,
                                  std::size_t max_in_flight = 1, const RetryPolicy& retry = {});

} // namespace skillsynth
