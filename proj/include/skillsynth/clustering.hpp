#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "skillsynth/embedding.hpp"
#include "skillsynth/graph.hpp"

namespace skillsynth {

struct SimilarityEdge {
    std::uint32_t a;  // a < b
    std::uint32_t b;
    double weight;
    bool operator==(const SimilarityEdge&) const = default;
};

/// Sparse undirected k-NN graph over unit embeddings. Node i is ids[i].
struct SimilarityGraph {
    std::vector<std::string> ids;
    std::vector<SimilarityEdge> edges;  // sorted by (a, b), no self-edges
    std::size_t k_neighbors = 0;
    double sim_floor = 0.0;

    std::size_t node_count() const { return ids.size(); }
};

/// Links each node to its <= k most similar others with similarity >=
/// sim_floor (ties broken by smaller id) and symmetrizes by union.
SimilarityGraph build_similarity_graph(const EmbeddingTable& embeddings, std::size_t k_neighbors, double sim_floor);

/// Bucket label per node, numbered 0.. in order of first appearance.
using Partition = std::vector<std::uint32_t>;

/// Multi-level Louvain modularity optimization. Node visitation order at each
/// level is a seeded shuffle, so equal seeds give equal partitions.
Partition louvain_partition(const SimilarityGraph& g, std::uint64_t seed);

/// Weighted Newman modularity of `p` on `g`; 0 for an edgeless graph.
double modularity(const SimilarityGraph& g, const Partition& p);

struct ClusterAssignment {
    std::map<std::string, std::string> canonical_of;    // member -> canonical member
    std::map<std::string, std::string> canonical_text;  // canonical -> text, when known
    double distance_threshold = 0.0;

    std::map<std::string, std::vector<std::string>> clusters() const;
    bool is_identity() const;
};

/// Complete-linkage agglomeration under cosine distance. Stops once the
/// closest pair of clusters is farther than `distance_threshold`; equal
/// distances merge the pair with the lexicographically smaller (id, id) key.
/// The canonical member of a cluster is its smallest id.
ClusterAssignment complete_linkage_merge(const std::vector<std::string>& members, const EmbeddingTable& embeddings,
                                         double distance_threshold);

struct DedupParams {
    std::size_t k_neighbors = 50;
    double sim_floor = 0.70;
    double distance_threshold = 0.15;
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 1;
};

struct DedupResult {
    ClusterAssignment assignment;
    SimilarityGraph similarity;
    Partition buckets;  // indexed like similarity.ids
};

/// Similarity graph, Louvain buckets, then complete linkage inside each
/// bucket. Input order does not matter; ids are processed sorted.
DedupResult deduplicate(const EmbeddingTable& embeddings, const DedupParams& params);

/// Rewrites scenarios to their canonical ids, re-keys transitions, and
/// collapses duplicate triples. Members merged from different roles become
/// Merged. Refuses an assignment that is not total over the graph.
SkillGraph canonicalize(const SkillGraph& g, const ClusterAssignment& assignment);

std::string assignment_to_csv(const ClusterAssignment& a);

} // namespace skillsynth
