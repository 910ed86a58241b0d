#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace skillsynth {

enum class Provenance { InferredPre, InferredPost, Merged };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// Decision-relevant abstraction of terminal state; a node of the skill graph.
struct Scenario {
    std::string id;
    std::string text;
    Provenance provenance = Provenance::InferredPre;
    std::optional<Eigen::VectorXf> embedding;

    static std::string make_id(std::string_view text);
};

enum class VerdictStatus { Pending, Retained, Rejected };

// The four retention criteria a skill must satisfy.
enum class RejectReason { NotLinuxExecutable, NoStructuredWorkflow, AdversarialContent, NotVerifiable };

std::string_view to_string(VerdictStatus v);
std::string_view to_string(RejectReason r);
VerdictStatus verdict_from_string(std::string_view s);
RejectReason reject_reason_from_string(std::string_view s);

struct SkillSpec {
    std::string id;
    std::string name;
    std::string body;
    std::string source;
    VerdictStatus verdict = VerdictStatus::Pending;
    std::optional<RejectReason> reject_reason;

    bool retained() const { return verdict == VerdictStatus::Retained; }

    static std::string make_id(std::string_view source, std::string_view name);
};

struct TripleKey {
    std::string src;
    std::string skill;
    std::string dst;

    auto operator<=>(const TripleKey&) const = default;
};

/// Skill-labeled directed edge src -> dst. Self-loops are representable and
/// are left for the triple filter to judge.
struct Transition {
    std::string src;
    std::string skill;
    std::string dst;
    bool verified = false;

    TripleKey key() const { return {src, skill, dst}; }
    bool is_self_loop() const { return src == dst; }
    bool operator==(const Transition&) const = default;
};

/// Directed multigraph of scenarios and skill-labeled transitions.
///
/// Construction is single-writer. After freeze() every mutator throws, and
/// the graph can be shared across readers.
class SkillGraph {
public:
    using ScenarioMap = std::map<std::string, Scenario>;
    using SkillMap = std::map<std::string, SkillSpec>;
    using TransitionMap = std::map<TripleKey, bool>;  // triple -> verified

    /// Inserts or updates a scenario. Re-adding an id with a different
    /// provenance marks it Merged.
    void add_scenario(Scenario s);
    void add_skill(SkillSpec k);

    /// Inserts the cross product pre x post for a retained skill. Returns the
    /// number of triples that were not already present.
    std::size_t add_transitions(const std::string& skill_id, std::span<const std::string> pre,
                                std::span<const std::string> post);

    /// Inserts one transition; returns false if the triple already existed
    /// (the verified flag is then OR-ed in).
    bool add_transition(const Transition& t);
    bool remove_transition(const TripleKey& key);
    void set_verified(const TripleKey& key, bool verified);

    /// Transitions leaving `scenario` whose skill is not in `exclude_skills`
    /// and whose destination is not in `exclude_scenarios`, in triple order.
    std::vector<Transition> out_edges(const std::string& scenario,
                                      const std::set<std::string>& exclude_scenarios = {},
                                      const std::set<std::string>& exclude_skills = {}) const;
    std::vector<Transition> in_edges(const std::string& scenario) const;

    const ScenarioMap& scenarios() const { return scenarios_; }
    const SkillMap& skills() const { return skills_; }
    const TransitionMap& transitions() const { return transitions_; }
    std::vector<Transition> transition_list() const;

    const Scenario& scenario(const std::string& id) const;
    const SkillSpec& skill(const std::string& id) const;
    bool has_scenario(const std::string& id) const { return scenarios_.contains(id); }
    bool has_skill(const std::string& id) const { return skills_.contains(id); }

    std::size_t node_count() const { return scenarios_.size(); }
    std::size_t transition_count() const { return transitions_.size(); }

    void remove_scenario(const std::string& id);
    Scenario& mutable_scenario(const std::string& id);

    void freeze() { frozen_ = true; }
    /// Copy that accepts mutation again, for stages that derive a new graph.
    SkillGraph thawed_copy() const {
        SkillGraph g = *this;
        g.frozen_ = false;
        return g;
    }
    bool frozen() const { return frozen_; }

    /// Throws DataError if an endpoint is dangling, a scenario is malformed,
    /// or the adjacency indices disagree with the transition set.
    void check_invariants() const;

    /// True when indices rebuilt from scratch match the incremental ones.
    bool indices_consistent() const;

private:
    void require_mutable() const;
    void index_insert(const TripleKey& key);
    void index_erase(const TripleKey& key);

    ScenarioMap scenarios_;
    SkillMap skills_;
    TransitionMap transitions_;
    std::map<std::string, std::set<TripleKey>> out_index_;
    std::map<std::string, std::set<TripleKey>> in_index_;
    bool frozen_ = false;
};

/// Integer-indexed, immutable view of a SkillGraph for sampling and
/// analytics. Scenario and skill indices follow sorted id order.
class FrozenGraph {
public:
    struct Edge {
        std::uint32_t skill;
        std::uint32_t dst;
        bool operator==(const Edge&) const = default;
    };

    explicit FrozenGraph(const SkillGraph& g);

    std::size_t scenario_count() const { return scenario_ids_.size(); }
    std::size_t skill_count() const { return skill_ids_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    const std::string& scenario_id(std::uint32_t i) const { return scenario_ids_[i]; }
    const std::string& scenario_text(std::uint32_t i) const { return scenario_texts_[i]; }
    const std::string& skill_id(std::uint32_t i) const { return skill_ids_[i]; }
    const std::string& skill_name(std::uint32_t i) const { return skill_names_[i]; }

    std::optional<std::uint32_t> scenario_index(const std::string& id) const;
    std::optional<std::uint32_t> skill_index(const std::string& id) const;

    /// Out edges sorted by (skill index, dst index).
    std::span<const Edge> out(std::uint32_t s) const { return out_[s]; }
    std::size_t in_degree(std::uint32_t s) const { return in_degree_[s]; }
    std::size_t out_degree(std::uint32_t s) const { return out_[s].size(); }

    bool has_edge(std::uint32_t src, std::uint32_t skill, std::uint32_t dst) const;

private:
    std::vector<std::string> scenario_ids_;
    std::vector<std::string> scenario_texts_;
    std::vector<std::string> skill_ids_;
    std::vector<std::string> skill_names_;
    std::unordered_map<std::string, std::uint32_t> scenario_lookup_;
    std::unordered_map<std::string, std::uint32_t> skill_lookup_;
    std::vector<std::vector<Edge>> out_;
    std::vector<std::size_t> in_degree_;
    std::size_t edge_count_ = 0;
};

struct RoleCounts {
    std::size_t source_only = 0;
    std::size_t sink_only = 0;
    std::size_t bridge = 0;
    std::size_t isolated = 0;
};

struct DegreeSummary {
    double mean = 0.0;
    std::size_t median = 0;  // lower median
    std::size_t max = 0;
};

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t transition_count = 0;
    RoleCounts roles;
    DegreeSummary degree;
    std::vector<std::size_t> components;  // weakly connected, sizes descending
    double giant_fraction = 0.0;
};

GraphStats compute_stats(const SkillGraph& g);

/// Total degree (in + out over the multigraph) per scenario, in id order.
std::vector<std::size_t> degree_sequence(const SkillGraph& g);

// Sizes of the full-scale production graph, kept for comparison. Not asserted.
namespace reported {
inline constexpr std::size_t kScenarioNodes = 82073;
inline constexpr std::size_t kTransitions = 57214;
inline constexpr double kGiantFraction = 0.856;
} // namespace reported

inline constexpr std::size_t kDefaultPathCountGuard = 1000;

/// Counts directed paths with no repeated scenario and no repeated skill and
/// length (number of transitions) in [min_len, max_len]. Exhaustive DFS; refuses
/// graphs with more than `node_guard` scenarios.
std::uint64_t count_simple_monotone_paths(const SkillGraph& g, std::size_t min_len, std::size_t max_len,
                                          std::size_t node_guard = kDefaultPathCountGuard);

// JSON Lines persistence. One self-describing record per scenario, skill, and
// edge; output is sorted and key-ordered so it round-trips byte for byte.
std::string to_json_lines(const SkillGraph& g);
SkillGraph graph_from_json_lines(std::string_view text, std::string_view source_name = "<graph>");
SkillGraph load_graph(const std::filesystem::path& file);
void save_graph(const SkillGraph& g, const std::filesystem::path& file);

} // namespace skillsynth
