#include "skillsynth/clustering.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "skillsynth/errors.hpp"
#include "skillsynth/parallel.hpp"
#include "skillsynth/rng.hpp"

namespace skillsynth {

// --- similarity graph -------------------------------------------------------

SimilarityGraph build_similarity_graph(const EmbeddingTable& embeddings, std::size_t k_neighbors, double sim_floor) {
    embeddings.require_unit_rows();

    // Work in sorted id order so output does not depend on table order.
    std::vector<std::size_t> order(embeddings.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return embeddings.ids()[x] < embeddings.ids()[y]; });

    SimilarityGraph g;
    g.k_neighbors = k_neighbors;
    g.sim_floor = sim_floor;
    const auto n = order.size();
    g.ids.reserve(n);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), embeddings.dim());
    for (std::size_t i = 0; i < n; ++i) {
        g.ids.push_back(embeddings.ids()[order[i]]);
        rows.row(static_cast<Eigen::Index>(i)) = embeddings.row(order[i]).cast<double>();
    }
    if (n < 2 || k_neighbors == 0) return g;

    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    std::vector<std::pair<double, std::uint32_t>> cand;
    constexpr Eigen::Index kBlock = 256;
    for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(n); start += kBlock) {
        const auto len = std::min<Eigen::Index>(kBlock, static_cast<Eigen::Index>(n) - start);
        const Eigen::MatrixXd sims = rows.middleRows(start, len) * rows.transpose();
        for (Eigen::Index r = 0; r < len; ++r) {
            const auto i = static_cast<std::uint32_t>(start + r);
            cand.clear();
            for (std::uint32_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double s = sims(r, j);
                if (s >= sim_floor) cand.emplace_back(s, j);
            }
            const auto keep = std::min(k_neighbors, cand.size());
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                              [](const auto& x, const auto& y) {
                                  return x.first != y.first ? x.first > y.first : x.second < y.second;
                              });
            for (std::size_t c = 0; c < keep; ++c) {
                const auto j = cand[c].second;
                auto key = std::minmax(i, j);
                if (seen.insert(key).second) {
                    g.edges.push_back({key.first, key.second, std::clamp(cand[c].first, sim_floor, 1.0)});
                }
            }
        }
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    return g;
}

// --- Louvain ----------------------------------------------------------------

namespace {

// Weighted undirected graph for one Louvain level. self[i] holds A_ii, which
// after aggregation counts every internal edge of the community twice.
struct Level {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
    std::vector<double> self;

    std::size_t size() const { return adj.size(); }
};

Level level_from(const SimilarityGraph& g) {
    Level lv;
    lv.adj.resize(g.node_count());
    lv.self.assign(g.node_count(), 0.0);
    for (const auto& e : g.edges) {
        lv.adj[e.a].emplace_back(e.b, e.weight);
        lv.adj[e.b].emplace_back(e.a, e.weight);
    }
    return lv;
}

// One round of local moves. Returns true if any node changed community.
bool local_moves(const Level& lv, std::vector<std::uint32_t>& comm, Rng& rng) {
    const auto n = lv.size();
    std::vector<double> k(n, 0.0);
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = lv.self[i];
        for (const auto& [j, w] : lv.adj[i]) k[i] += w;
        m2 += k[i];
    }
    if (m2 <= 0.0) return false;

    std::vector<double> tot(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) tot[comm[i]] += k[i];

    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::map<std::uint32_t, double> links;  // neighbor community -> weight, ordered for determinism
    bool moved_any = false;
    for (bool moved = true; moved;) {
        moved = false;
        for (auto i : order) {
            const auto home = comm[i];
            links.clear();
            links[home] = 0.0;
            for (const auto& [j, w] : lv.adj[i]) {
                if (j != i) links[comm[j]] += w;
            }
            tot[home] -= k[i];
            auto best = home;
            double best_gain = links[home] - tot[home] * k[i] / m2;
            for (const auto& [c, w] : links) {
                const double gain = w - tot[c] * k[i] / m2;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best = c;
                }
            }
            tot[best] += k[i];
            if (best != home) {
                comm[i] = best;
                moved = true;
                moved_any = true;
            }
        }
    }
    return moved_any;
}

// Renumbers communities densely in order of first appearance.
std::uint32_t renumber(std::vector<std::uint32_t>& comm) {
    std::map<std::uint32_t, std::uint32_t> remap;
    for (auto& c : comm) {
        auto [it, fresh] = remap.emplace(c, static_cast<std::uint32_t>(remap.size()));
        c = it->second;
    }
    return static_cast<std::uint32_t>(remap.size());
}

Level aggregate(const Level& lv, const std::vector<std::uint32_t>& comm, std::uint32_t count) {
    Level out;
    out.adj.resize(count);
    out.self.assign(count, 0.0);
    std::vector<std::map<std::uint32_t, double>> acc(count);
    for (std::size_t i = 0; i < lv.size(); ++i) {
        const auto ci = comm[i];
        out.self[ci] += lv.self[i];
        for (const auto& [j, w] : lv.adj[i]) {
            const auto cj = comm[j];
            if (ci == cj) out.self[ci] += w;  // each internal edge seen from both ends
            else acc[ci][cj] += w;
        }
    }
    for (std::uint32_t c = 0; c < count; ++c) {
        for (const auto& [d, w] : acc[c]) out.adj[c].emplace_back(d, w);
    }
    return out;
}

} // namespace

Partition louvain_partition(const SimilarityGraph& g, std::uint64_t seed) {
    const auto n = g.node_count();
    Partition node_comm(n);
    std::iota(node_comm.begin(), node_comm.end(), 0);
    if (n == 0 || g.edges.empty()) return node_comm;

    Rng rng(seed);
    Level lv = level_from(g);
    for (;;) {
        std::vector<std::uint32_t> comm(lv.size());
        std::iota(comm.begin(), comm.end(), 0);
        if (!local_moves(lv, comm, rng)) break;
        const auto count = renumber(comm);
        for (auto& c : node_comm) c = comm[c];
        if (count == lv.size()) break;
        lv = aggregate(lv, comm, count);
    }
    renumber(node_comm);
    return node_comm;
}

double modularity(const SimilarityGraph& g, const Partition& p) {
    if (p.size() != g.node_count()) throw DataError("partition size does not match graph");
    double m2 = 0.0;
    std::map<std::uint32_t, double> in, tot;
    for (const auto& e : g.edges) {
        m2 += 2 * e.weight;
        tot[p[e.a]] += e.weight;
        tot[p[e.b]] += e.weight;
        if (p[e.a] == p[e.b]) in[p[e.a]] += 2 * e.weight;
    }
    if (m2 <= 0.0) return 0.0;
    double q = 0.0;
    for (const auto& [c, t] : tot) q += in[c] / m2 - (t / m2) * (t / m2);
    return q;
}

// --- complete linkage -------------------------------------------------------

std::map<std::string, std::vector<std::string>> ClusterAssignment::clusters() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [member, canon] : canonical_of) out[canon].push_back(member);
    return out;
}

bool ClusterAssignment::is_identity() const {
    return std::all_of(canonical_of.begin(), canonical_of.end(),
                       [](const auto& kv) { return kv.first == kv.second; });
}

ClusterAssignment complete_linkage_merge(const std::vector<std::string>& members, const EmbeddingTable& embeddings,
                                         double distance_threshold) {
    std::vector<std::string> ids(members);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto n = static_cast<Eigen::Index>(ids.size());

    ClusterAssignment out;
    out.distance_threshold = distance_threshold;
    if (n == 0) return out;

    Eigen::MatrixXd rows(n, embeddings.dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        rows.row(i) = embeddings.row(embeddings.index_of(ids[static_cast<std::size_t>(i)])).cast<double>();
    }
    Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(n, n) - rows * rows.transpose();

    // A cluster is represented by its smallest member index, so scanning
    // (i, j) in ascending order with a strict comparison realizes the
    // lexicographic tie-break.
    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<Eigen::Index> rep(static_cast<std::size_t>(n));
    std::iota(rep.begin(), rep.end(), 0);
    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (active[j] && dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi < 0 || best > distance_threshold) break;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            const double d = std::max(dist(bi, k), dist(bj, k));
            dist(bi, k) = dist(k, bi) = d;
        }
        active[bj] = 0;
        for (auto& r : rep) {
            if (r == bj) r = bi;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        out.canonical_of[ids[static_cast<std::size_t>(i)]] = ids[static_cast<std::size_t>(rep[i])];
    }
    return out;
}

DedupResult deduplicate(const EmbeddingTable& embeddings, const DedupParams& params) {
    DedupResult res;
    res.similarity = build_similarity_graph(embeddings, params.k_neighbors, params.sim_floor);
    res.buckets = louvain_partition(res.similarity, params.seed);
    res.assignment.distance_threshold = params.distance_threshold;

    std::map<std::uint32_t, std::vector<std::string>> buckets;
    for (std::size_t i = 0; i < res.buckets.size(); ++i) buckets[res.buckets[i]].push_back(res.similarity.ids[i]);
    std::vector<std::vector<std::string>> groups;
    groups.reserve(buckets.size());
    for (auto& [b, members] : buckets) groups.push_back(std::move(members));

    std::vector<ClusterAssignment> parts(groups.size());
    parallel_for(groups.size(), params.max_in_flight, [&](std::size_t i) {
        parts[i] = complete_linkage_merge(groups[i], embeddings, params.distance_threshold);
    });
    for (const auto& part : parts) res.assignment.canonical_of.insert(part.canonical_of.begin(), part.canonical_of.end());
    return res;
}

// --- canonicalization -------------------------------------------------------

SkillGraph canonicalize(const SkillGraph& g, const ClusterAssignment& assignment) {
    for (const auto& [id, s] : g.scenarios()) {
        if (!assignment.canonical_of.contains(id)) {
            throw DataError("assignment is partial: no canonical id for scenario " + id);
        }
    }
    SkillGraph out;
    for (const auto& [canon, members] : assignment.clusters()) {
        if (!g.has_scenario(canon)) {
            // Members outside the graph are tolerated; the canonical must exist
            // if any graph member maps to it.
            bool used = std::any_of(members.begin(), members.end(), [&](const auto& m) { return g.has_scenario(m); });
            if (used) throw DataError("canonical id " + canon + " is not a scenario of the graph");
            continue;
        }
        Scenario s = g.scenario(canon);
        std::set<Provenance> roles;
        for (const auto& m : members) {
            if (g.has_scenario(m)) roles.insert(g.scenario(m).provenance);
        }
        if (roles.size() > 1) s.provenance = Provenance::Merged;
        if (auto it = assignment.canonical_text.find(canon); it != assignment.canonical_text.end()) {
            if (it->second != s.text) s.provenance = Provenance::Merged;
            s.text = it->second;
        }
        out.add_scenario(std::move(s));
    }
    for (const auto& [id, k] : g.skills()) out.add_skill(k);
    for (const auto& [key, verified] : g.transitions()) {
        out.add_transition({assignment.canonical_of.at(key.src), key.skill, assignment.canonical_of.at(key.dst), verified});
    }
    return out;
}

std::string assignment_to_csv(const ClusterAssignment& a) {
    std::ostringstream out;
    out << "member_id,canonical_id\n";
    for (const auto& [member, canon] : a.canonical_of) out << member << ',' << canon << '\n';
    return out.str();
}

} // namespace skillsynth
