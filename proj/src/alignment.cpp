#include "skillsynth/alignment.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "skillsynth/clustering.hpp"
#include "skillsynth/parallel.hpp"
#include "skillsynth/prompts.hpp"

namespace skillsynth {

std::string_view to_string(AlignDirection d) {
    return d == AlignDirection::PostToPre ? "post->pre" : "pre->post";
}

std::vector<AlignmentCandidate> retrieve_candidates(const std::string& query_id, const std::vector<std::string>& pool,
                                                    const EmbeddingTable& embeddings, std::size_t top_k,
                                                    AlignDirection direction) {
    const auto q = embeddings.row(embeddings.index_of(query_id));
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(pool.size());
    for (const auto& id : pool) {
        if (id == query_id) continue;
        scored.emplace_back(cosine_similarity(q, embeddings.row(embeddings.index_of(id))), &id);
    }
    const auto keep = std::min(top_k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : *a.second < *b.second; });
    std::vector<AlignmentCandidate> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& other = *scored[i].second;
        if (direction == AlignDirection::PostToPre) out.push_back({query_id, other, scored[i].first, direction});
        else out.push_back({other, query_id, scored[i].first, direction});
    }
    return out;
}

EmbeddingTable graph_embeddings(const SkillGraph& g) {
    std::vector<std::string> ids;
    Eigen::Index dim = -1;
    for (const auto& [id, s] : g.scenarios()) {
        if (!s.embedding) throw DataError("scenario " + id + " has no embedding");
        if (dim < 0) dim = s.embedding->size();
        if (s.embedding->size() != dim) throw DataError("scenario " + id + " has a mismatched embedding dimension");
        ids.push_back(id);
    }
    EmbeddingMatrix m(static_cast<Eigen::Index>(ids.size()), std::max<Eigen::Index>(dim, 0));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = g.scenario(ids[i]).embedding->transpose();
    }
    return EmbeddingTable(std::move(ids), std::move(m));
}

AlignmentPrompts AlignmentPrompts::load_default() {
    return {load_prompt("align_forward"), load_prompt("align_reverse")};
}

AlignmentResult bidirectional_align(const SkillGraph& g, CompatibilityJudge& judge, const AlignParams& params,
                                    const AlignmentPrompts& prompts) {
    const auto table = graph_embeddings(g);
    std::vector<std::string> posts, pres;
    for (const auto& [id, s] : g.scenarios()) {
        if (s.provenance != Provenance::InferredPre) posts.push_back(id);
        if (s.provenance != Provenance::InferredPost) pres.push_back(id);
    }

    std::vector<AlignmentCandidate> candidates;
    for (const auto& p : posts) {
        auto c = retrieve_candidates(p, pres, table, params.top_k, AlignDirection::PostToPre);
        candidates.insert(candidates.end(), c.begin(), c.end());
    }
    for (const auto& p : pres) {
        auto c = retrieve_candidates(p, posts, table, params.top_k, AlignDirection::PreToPost);
        candidates.insert(candidates.end(), c.begin(), c.end());
    }

    enum class Outcome : char { Rejected, Accepted, Undecided };
    std::vector<Outcome> verdicts(candidates.size(), Outcome::Rejected);
    parallel_for(candidates.size(), params.max_in_flight, [&](std::size_t i) {
        const auto& c = candidates[i];
        AlignmentQuery q;
        q.post_id = c.post_id;
        q.pre_id = c.pre_id;
        q.post_text = g.scenario(c.post_id).text;
        q.pre_text = g.scenario(c.pre_id).text;
        q.similarity = c.similarity;
        q.direction = c.direction;
        q.prompt = render_template(c.direction == AlignDirection::PostToPre ? prompts.forward : prompts.reverse,
                                   {{"post", q.post_text}, {"pre", q.pre_text}});
        std::string err;
        auto v = with_retries(params.retry, [&] { return judge.judge(q); }, &err);
        if (!v) {
            spdlog::warn("alignment judge undecided for {} / {} ({}): {}", c.post_id, c.pre_id, to_string(c.direction), err);
            verdicts[i] = Outcome::Undecided;
        } else {
            verdicts[i] = v->compatible ? Outcome::Accepted : Outcome::Rejected;
        }
    });

    AlignmentResult res;
    res.judged = candidates.size();
    std::map<std::pair<std::string, std::string>, AlignedPair> accepted;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (verdicts[i] == Outcome::Undecided) ++res.undecided;
        if (verdicts[i] != Outcome::Accepted) continue;
        const auto& c = candidates[i];
        auto& pair = accepted[{c.post_id, c.pre_id}];
        pair.post_id = c.post_id;
        pair.pre_id = c.pre_id;
        pair.similarity = c.similarity;
        if (c.direction == AlignDirection::PostToPre) pair.forward = true;
        else pair.reverse = true;
    }
    for (auto& [key, pair] : accepted) res.accepted.push_back(std::move(pair));
    return res;
}

std::string aligned_pairs_to_csv(const std::vector<AlignedPair>& pairs) {
    std::ostringstream out;
    out << "post_id,pre_id,similarity,forward,reverse\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& p : pairs) {
        out << p.post_id << ',' << p.pre_id << ',' << p.similarity << ',' << (p.forward ? 1 : 0) << ','
            << (p.reverse ? 1 : 0) << '\n';
    }
    return out.str();
}

MergeResult merge_aligned(const SkillGraph& g, const std::vector<AlignedPair>& pairs, ScenarioMerger& merger,
                          const RetryPolicy& retry) {
    std::vector<std::string> ids;
    for (const auto& [id, s] : g.scenarios()) ids.push_back(id);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    std::vector<std::size_t> parent(ids.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& p : pairs) {
        auto a = index.find(p.post_id), b = index.find(p.pre_id);
        if (a == index.end() || b == index.end()) throw DataError("aligned pair references an unknown scenario");
        auto ra = find(a->second), rb = find(b->second);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }

    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[find(i)].push_back(ids[i]);

    MergeResult res;
    ClusterAssignment assign;
    std::vector<std::string> merged_canon;
    for (const auto& [root, members] : groups) {
        const auto& canon = members.front();  // ids are sorted, so this is the smallest
        bool merge_ok = members.size() > 1;
        if (merge_ok) {
            std::vector<std::string> texts;
            for (const auto& m : members) texts.push_back(g.scenario(m).text);
            std::string err;
            auto text = with_retries(retry, [&] { return merger.merge(texts); }, &err);
            if (!text || text->empty()) {
                spdlog::warn("scenario merge failed for group of {} rooted at {}: {}", members.size(), canon,
                             text ? "empty text" : err);
                merge_ok = false;
                ++res.failed_groups;
            } else {
                assign.canonical_text[canon] = *text;
                merged_canon.push_back(canon);
                ++res.merged_groups;
            }
        }
        for (const auto& m : members) assign.canonical_of[m] = merge_ok ? canon : m;
    }

    res.graph = canonicalize(g, assign);
    for (const auto& canon : merged_canon) {
        auto& s = res.graph.mutable_scenario(canon);
        s.provenance = Provenance::Merged;
        Eigen::VectorXf mean = Eigen::VectorXf::Zero(s.embedding ? s.embedding->size() : 0);
        bool all_embedded = s.embedding.has_value();
        for (const auto& [member, c] : assign.canonical_of) {
            if (c != canon) continue;
            const auto& e = g.scenario(member).embedding;
            if (!e || e->size() != mean.size()) {
                all_embedded = false;
                break;
            }
            mean += *e;
        }
        if (all_embedded && mean.norm() > 0) s.embedding = mean.normalized();
    }
    return res;
}

TripleFilterResult filter_triples(const SkillGraph& g, TripleJudge& judge, const std::string& prompt_template,
                                  std::size_t max_in_flight, const RetryPolicy& retry) {
    const auto triples = g.transition_list();
    enum class Outcome : char { Rejected, Accepted, Undecided };
    std::vector<Outcome> verdicts(triples.size(), Outcome::Rejected);
    parallel_for(triples.size(), max_in_flight, [&](std::size_t i) {
        const auto& t = triples[i];
        TripleQuery q;
        q.key = t.key();
        q.src_text = g.scenario(t.src).text;
        q.dst_text = g.scenario(t.dst).text;
        const auto& k = g.skill(t.skill);
        q.skill_name = k.name;
        q.skill_body = k.body;
        q.prompt = render_template(prompt_template, {{"src", q.src_text}, {"skill", k.name}, {"dst", q.dst_text}});
        std::string err;
        auto v = with_retries(retry, [&] { return judge.judge(q); }, &err);
        if (!v) {
            spdlog::warn("triple judge failed for {} -{}-> {}, keeping unverified: {}", t.src, t.skill, t.dst, err);
            verdicts[i] = Outcome::Undecided;
        } else {
            verdicts[i] = v->compatible ? Outcome::Accepted : Outcome::Rejected;
        }
    });

    TripleFilterResult res;
    res.graph = g.thawed_copy();
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto key = triples[i].key();
        switch (verdicts[i]) {
            case Outcome::Rejected:
                res.graph.remove_transition(key);
                ++res.removed;
                break;
            case Outcome::Accepted: res.graph.set_verified(key, true); break;
            case Outcome::Undecided:
                res.graph.set_verified(key, false);
                ++res.unverified;
                break;
        }
    }
    return res;
}

} // namespace skillsynth
