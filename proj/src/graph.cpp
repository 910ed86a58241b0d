#include "skillsynth/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "skillsynth/digest.hpp"
#include "skillsynth/errors.hpp"

namespace skillsynth {

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::InferredPre: return "inferred-pre";
        case Provenance::InferredPost: return "inferred-post";
        case Provenance::Merged: return "merged";
    }
    return "merged";
}

Provenance provenance_from_string(std::string_view s) {
    if (s == "inferred-pre") return Provenance::InferredPre;
    if (s == "inferred-post") return Provenance::InferredPost;
    if (s == "merged") return Provenance::Merged;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

std::string_view to_string(VerdictStatus v) {
    switch (v) {
        case VerdictStatus::Pending: return "pending";
        case VerdictStatus::Retained: return "retained";
        case VerdictStatus::Rejected: return "rejected";
    }
    return "pending";
}

std::string_view to_string(RejectReason r) {
    switch (r) {
        case RejectReason::NotLinuxExecutable: return "not_linux_executable";
        case RejectReason::NoStructuredWorkflow: return "no_structured_workflow";
        case RejectReason::AdversarialContent: return "adversarial_content";
        case RejectReason::NotVerifiable: return "not_verifiable";
    }
    return "not_verifiable";
}

VerdictStatus verdict_from_string(std::string_view s) {
    if (s == "pending") return VerdictStatus::Pending;
    if (s == "retained") return VerdictStatus::Retained;
    if (s == "rejected") return VerdictStatus::Rejected;
    throw DataError("unknown filter verdict '" + std::string(s) + "'");
}

RejectReason reject_reason_from_string(std::string_view s) {
    if (s == "not_linux_executable") return RejectReason::NotLinuxExecutable;
    if (s == "no_structured_workflow") return RejectReason::NoStructuredWorkflow;
    if (s == "adversarial_content") return RejectReason::AdversarialContent;
    if (s == "not_verifiable") return RejectReason::NotVerifiable;
    throw DataError("unknown reject reason '" + std::string(s) + "'");
}

std::string Scenario::make_id(std::string_view text) { return stable_id("s_", {"scenario", text}); }

std::string SkillSpec::make_id(std::string_view source, std::string_view name) {
    return stable_id("k_", {source, name});
}

// --- SkillGraph -------------------------------------------------------------

void SkillGraph::require_mutable() const {
    if (frozen_) throw DataError("graph is frozen");
}

void SkillGraph::add_scenario(Scenario s) {
    require_mutable();
    if (s.text.empty()) throw DataError("scenario " + s.id + " has empty text");
    auto it = scenarios_.find(s.id);
    if (it == scenarios_.end()) {
        scenarios_.emplace(s.id, std::move(s));
        return;
    }
    if (it->second.provenance != s.provenance) it->second.provenance = Provenance::Merged;
    if (!it->second.embedding && s.embedding) it->second.embedding = std::move(s.embedding);
}

void SkillGraph::add_skill(SkillSpec k) {
    require_mutable();
    if (k.verdict == VerdictStatus::Rejected && !k.reject_reason) {
        throw DataError("rejected skill " + k.id + " carries no reason");
    }
    if (k.verdict == VerdictStatus::Retained && k.body.empty()) {
        throw DataError("retained skill " + k.id + " has an empty body");
    }
    skills_[k.id] = std::move(k);
}

std::size_t SkillGraph::add_transitions(const std::string& skill_id, std::span<const std::string> pre,
                                        std::span<const std::string> post) {
    require_mutable();
    auto k = skills_.find(skill_id);
    if (k == skills_.end()) throw DataError("unknown skill " + skill_id);
    if (!k->second.retained()) {
        std::string why = k->second.reject_reason ? std::string(to_string(*k->second.reject_reason))
                                                  : std::string(to_string(k->second.verdict));
        throw DataError("skill " + skill_id + " is not retained (" + why + ")");
    }
    for (const auto& ids : {pre, post}) {
        for (const auto& id : ids) {
            if (!scenarios_.contains(id)) throw DataError("unknown scenario " + id);
        }
    }
    std::size_t inserted = 0;
    for (const auto& src : pre) {
        for (const auto& dst : post) {
            if (add_transition({src, skill_id, dst, false})) ++inserted;
        }
    }
    return inserted;
}

bool SkillGraph::add_transition(const Transition& t) {
    require_mutable();
    if (!scenarios_.contains(t.src)) throw DataError("unknown scenario " + t.src);
    if (!scenarios_.contains(t.dst)) throw DataError("unknown scenario " + t.dst);
    if (!skills_.contains(t.skill)) throw DataError("unknown skill " + t.skill);
    auto key = t.key();
    auto [it, fresh] = transitions_.emplace(key, t.verified);
    if (!fresh) {
        it->second = it->second || t.verified;
        return false;
    }
    index_insert(key);
    return true;
}

bool SkillGraph::remove_transition(const TripleKey& key) {
    require_mutable();
    if (transitions_.erase(key) == 0) return false;
    index_erase(key);
    return true;
}

void SkillGraph::set_verified(const TripleKey& key, bool verified) {
    require_mutable();
    auto it = transitions_.find(key);
    if (it == transitions_.end()) throw DataError("unknown transition " + key.src + " -" + key.skill + "-> " + key.dst);
    it->second = verified;
}

void SkillGraph::index_insert(const TripleKey& key) {
    out_index_[key.src].insert(key);
    in_index_[key.dst].insert(key);
}

void SkillGraph::index_erase(const TripleKey& key) {
    auto erase_from = [&](auto& index, const std::string& node) {
        auto it = index.find(node);
        if (it == index.end()) return;
        it->second.erase(key);
        if (it->second.empty()) index.erase(it);
    };
    erase_from(out_index_, key.src);
    erase_from(in_index_, key.dst);
}

std::vector<Transition> SkillGraph::out_edges(const std::string& scenario,
                                              const std::set<std::string>& exclude_scenarios,
                                              const std::set<std::string>& exclude_skills) const {
    if (!scenarios_.contains(scenario)) throw DataError("unknown scenario " + scenario);
    std::vector<Transition> out;
    auto it = out_index_.find(scenario);
    if (it == out_index_.end()) return out;
    for (const auto& key : it->second) {
        if (exclude_skills.contains(key.skill) || exclude_scenarios.contains(key.dst)) continue;
        out.push_back({key.src, key.skill, key.dst, transitions_.at(key)});
    }
    return out;
}

std::vector<Transition> SkillGraph::in_edges(const std::string& scenario) const {
    if (!scenarios_.contains(scenario)) throw DataError("unknown scenario " + scenario);
    std::vector<Transition> out;
    auto it = in_index_.find(scenario);
    if (it == in_index_.end()) return out;
    for (const auto& key : it->second) out.push_back({key.src, key.skill, key.dst, transitions_.at(key)});
    return out;
}

std::vector<Transition> SkillGraph::transition_list() const {
    std::vector<Transition> out;
    out.reserve(transitions_.size());
    for (const auto& [key, verified] : transitions_) out.push_back({key.src, key.skill, key.dst, verified});
    return out;
}

const Scenario& SkillGraph::scenario(const std::string& id) const {
    auto it = scenarios_.find(id);
    if (it == scenarios_.end()) throw DataError("unknown scenario " + id);
    return it->second;
}

const SkillSpec& SkillGraph::skill(const std::string& id) const {
    auto it = skills_.find(id);
    if (it == skills_.end()) throw DataError("unknown skill " + id);
    return it->second;
}

Scenario& SkillGraph::mutable_scenario(const std::string& id) {
    require_mutable();
    auto it = scenarios_.find(id);
    if (it == scenarios_.end()) throw DataError("unknown scenario " + id);
    return it->second;
}

void SkillGraph::remove_scenario(const std::string& id) {
    require_mutable();
    if (out_index_.contains(id) || in_index_.contains(id)) {
        throw DataError("scenario " + id + " still has transitions");
    }
    scenarios_.erase(id);
}

void SkillGraph::check_invariants() const {
    for (const auto& [id, s] : scenarios_) {
        if (id != s.id) throw DataError("scenario key mismatch for " + id);
        if (s.text.empty()) throw DataError("scenario " + id + " has empty text");
        if (s.embedding) {
            const double norm = s.embedding->cast<double>().norm();
            if (std::abs(norm - 1.0) > 1e-6) throw DataError("scenario " + id + " embedding is not unit-norm");
        }
    }
    for (const auto& [id, k] : skills_) {
        if (id != k.id) throw DataError("skill key mismatch for " + id);
        if (k.verdict == VerdictStatus::Rejected && !k.reject_reason) {
            throw DataError("rejected skill " + id + " carries no reason");
        }
        if (k.retained() && k.body.empty()) throw DataError("retained skill " + id + " has an empty body");
    }
    for (const auto& [key, verified] : transitions_) {
        if (!scenarios_.contains(key.src) || !scenarios_.contains(key.dst)) {
            throw DataError("dangling transition endpoint in " + key.src + " -> " + key.dst);
        }
        if (!skills_.contains(key.skill)) throw DataError("dangling transition skill " + key.skill);
    }
    if (!indices_consistent()) throw DataError("adjacency indices disagree with transition set");
}

bool SkillGraph::indices_consistent() const {
    std::map<std::string, std::set<TripleKey>> out, in;
    for (const auto& [key, verified] : transitions_) {
        out[key.src].insert(key);
        in[key.dst].insert(key);
    }
    return out == out_index_ && in == in_index_;
}

// --- FrozenGraph ------------------------------------------------------------

FrozenGraph::FrozenGraph(const SkillGraph& g) {
    scenario_ids_.reserve(g.scenarios().size());
    for (const auto& [id, s] : g.scenarios()) {
        scenario_lookup_.emplace(id, static_cast<std::uint32_t>(scenario_ids_.size()));
        scenario_ids_.push_back(id);
        scenario_texts_.push_back(s.text);
    }
    for (const auto& [id, k] : g.skills()) {
        skill_lookup_.emplace(id, static_cast<std::uint32_t>(skill_ids_.size()));
        skill_ids_.push_back(id);
        skill_names_.push_back(k.name);
    }
    out_.resize(scenario_ids_.size());
    in_degree_.assign(scenario_ids_.size(), 0);
    for (const auto& [key, verified] : g.transitions()) {
        const auto s = scenario_lookup_.at(key.src);
        const auto d = scenario_lookup_.at(key.dst);
        out_[s].push_back({skill_lookup_.at(key.skill), d});
        ++in_degree_[d];
        ++edge_count_;
    }
    for (auto& edges : out_) {
        std::sort(edges.begin(), edges.end(),
                  [](const Edge& a, const Edge& b) { return std::tie(a.skill, a.dst) < std::tie(b.skill, b.dst); });
    }
}

std::optional<std::uint32_t> FrozenGraph::scenario_index(const std::string& id) const {
    auto it = scenario_lookup_.find(id);
    if (it == scenario_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> FrozenGraph::skill_index(const std::string& id) const {
    auto it = skill_lookup_.find(id);
    if (it == skill_lookup_.end()) return std::nullopt;
    return it->second;
}

bool FrozenGraph::has_edge(std::uint32_t src, std::uint32_t skill, std::uint32_t dst) const {
    if (src >= out_.size()) return false;
    const Edge e{skill, dst};
    return std::binary_search(out_[src].begin(), out_[src].end(), e, [](const Edge& a, const Edge& b) {
        return std::tie(a.skill, a.dst) < std::tie(b.skill, b.dst);
    });
}

// --- analytics --------------------------------------------------------------

std::vector<std::size_t> degree_sequence(const SkillGraph& g) {
    std::map<std::string, std::size_t> deg;
    for (const auto& [id, s] : g.scenarios()) deg[id] = 0;
    for (const auto& [key, verified] : g.transitions()) {
        ++deg[key.src];
        ++deg[key.dst];
    }
    std::vector<std::size_t> out;
    out.reserve(deg.size());
    for (const auto& [id, d] : deg) out.push_back(d);
    return out;
}

GraphStats compute_stats(const SkillGraph& g) {
    GraphStats st;
    st.node_count = g.node_count();
    st.transition_count = g.transition_count();
    if (st.node_count == 0) return st;

    const FrozenGraph fg(g);
    const auto n = fg.scenario_count();

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    std::vector<std::size_t> degree(n, 0);
    for (std::uint32_t s = 0; s < n; ++s) {
        const auto out_deg = fg.out_degree(s);
        const auto in_deg = fg.in_degree(s);
        degree[s] = out_deg + in_deg;
        if (out_deg > 0 && in_deg == 0) ++st.roles.source_only;
        else if (out_deg == 0 && in_deg > 0) ++st.roles.sink_only;
        else if (out_deg > 0 && in_deg > 0) ++st.roles.bridge;
        else ++st.roles.isolated;
        for (const auto& e : fg.out(s)) {
            auto a = find(s), b = find(e.dst);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    }

    std::map<std::size_t, std::size_t> comp;
    for (std::size_t i = 0; i < n; ++i) ++comp[find(i)];
    for (const auto& [root, size] : comp) st.components.push_back(size);
    std::sort(st.components.rbegin(), st.components.rend());
    st.giant_fraction = static_cast<double>(st.components.front()) / static_cast<double>(n);

    auto sorted = degree;
    std::sort(sorted.begin(), sorted.end());
    st.degree.mean = static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::size_t{0})) /
                     static_cast<double>(n);
    st.degree.median = sorted[(n - 1) / 2];
    st.degree.max = sorted.back();
    return st;
}

std::uint64_t count_simple_monotone_paths(const SkillGraph& g, std::size_t min_len, std::size_t max_len,
                                          std::size_t node_guard) {
    if (g.node_count() > node_guard) {
        throw DataError("path count refused: graph has " + std::to_string(g.node_count()) +
                        " scenarios and " + std::to_string(g.transition_count()) +
                        " transitions, guard is " + std::to_string(node_guard) + " scenarios");
    }
    if (min_len > max_len || max_len == 0) return 0;
    const FrozenGraph fg(g);
    std::vector<char> seen_scenario(fg.scenario_count(), 0);
    std::vector<char> seen_skill(fg.skill_count(), 0);
    std::uint64_t total = 0;

    std::function<void(std::uint32_t, std::size_t)> dfs = [&](std::uint32_t at, std::size_t depth) {
        if (depth >= min_len && depth >= 1) ++total;
        if (depth == max_len) return;
        for (const auto& e : fg.out(at)) {
            if (seen_scenario[e.dst] || seen_skill[e.skill]) continue;
            seen_scenario[e.dst] = 1;
            seen_skill[e.skill] = 1;
            dfs(e.dst, depth + 1);
            seen_scenario[e.dst] = 0;
            seen_skill[e.skill] = 0;
        }
    };
    for (std::uint32_t s = 0; s < fg.scenario_count(); ++s) {
        seen_scenario[s] = 1;
        dfs(s, 0);
        seen_scenario[s] = 0;
    }
    return total;
}

} // namespace skillsynth
