#include <doctest.h>

#include <random>

#include "skillsynth/alignment.hpp"
#include "skillsynth/ingest.hpp"
#include "skillsynth/mock_providers.hpp"

using namespace skillsynth;

namespace {

class DirectionalJudge : public CompatibilityJudge {
public:
    explicit DirectionalJudge(AlignDirection d) : dir_(d) {}
    JudgeVerdict judge(const AlignmentQuery& q) override {
        return {q.direction == dir_ && q.similarity >= 0.75, "", "test"};
    }

private:
    AlignDirection dir_;
};

SkillSpec skill(const std::string& id) {
    SkillSpec k;
    k.id = id;
    k.name = id;
    k.body = "```sh\ntrue\n```";
    k.verdict = VerdictStatus::Retained;
    return k;
}

// two skills whose post/pre texts differ by one content word
SkillGraph near_miss_graph() {
    SkillGraph g;
    auto add = [&](const std::string& text, Provenance p) {
        g.add_scenario({Scenario::make_id(text), text, p, {}});
        return Scenario::make_id(text);
    };
    const auto a = add("empty project directory", Provenance::InferredPre);
    const auto b = add("single merged access log file", Provenance::InferredPost);
    const auto c = add("one merged access log file", Provenance::InferredPre);
    const auto d = add("status code report", Provenance::InferredPost);
    g.add_skill(skill("k1"));
    g.add_skill(skill("k2"));
    g.add_transition({a, "k1", b, false});
    g.add_transition({c, "k2", d, false});
    MockEmbedder e;
    embed_scenarios(g, e, "");
    return g;
}

AlignParams quiet() {
    AlignParams p;
    p.retry.retries = 0;
    p.retry.base_backoff = std::chrono::milliseconds(0);
    return p;
}

} // namespace

TEST_CASE("top-k retrieval matches an all-pairs scan") {
    std::mt19937_64 gen(3);
    std::normal_distribution<float> n(0, 1);
    const int count = 60;
    EmbeddingMatrix m(count, 16);
    std::vector<std::string> ids;
    for (int i = 0; i < count; ++i) {
        for (int d = 0; d < 16; ++d) m(i, d) = n(gen);
        ids.push_back("id" + std::to_string(100 + i));
    }
    normalize_rows(m);
    const EmbeddingTable t(ids, m);
    std::vector<std::string> pool(ids.begin() + 1, ids.end());
    for (std::size_t k : {1u, 5u, 59u, 1000u}) {
        const auto got = retrieve_candidates(ids[0], pool, t, k, AlignDirection::PostToPre);
        std::vector<std::pair<double, std::string>> all;
        for (const auto& p : pool) all.push_back({-cosine_similarity(t.row(0), t.row(t.index_of(p))), p});
        std::sort(all.begin(), all.end());
        REQUIRE(got.size() == std::min<std::size_t>(k, pool.size()));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].pre_id == all[i].second);
            CHECK(got[i].post_id == ids[0]);
            CHECK(got[i].similarity == doctest::Approx(-all[i].first));
        }
    }
    auto with_self = pool;
    with_self.push_back(ids[0]);
    for (const auto& c : retrieve_candidates(ids[0], with_self, t, 1000, AlignDirection::PreToPost)) {
        CHECK(c.post_id != ids[0]);
    }
}

TEST_CASE("accepted set is the union of both passes with provenance") {
    const auto g = near_miss_graph();
    const auto prompts = AlignmentPrompts::load_default();
    MockCompatibilityJudge both;
    const auto r = bidirectional_align(g, both, quiet(), prompts);
    REQUIRE(r.accepted.size() == 1);
    CHECK(r.accepted[0].forward);
    CHECK(r.accepted[0].reverse);
    CHECK(r.accepted[0].similarity == doctest::Approx(0.8).epsilon(1e-6));

    DirectionalJudge rev(AlignDirection::PreToPost);
    const auto only_rev = bidirectional_align(g, rev, quiet(), prompts);
    REQUIRE(only_rev.accepted.size() == 1);
    CHECK_FALSE(only_rev.accepted[0].forward);
    CHECK(only_rev.accepted[0].reverse);
    CHECK(only_rev.judged == r.judged);
}

TEST_CASE("judge failures are undecided, not accepted") {
    const auto g = near_miss_graph();
    FailingProvider fail;
    const auto r = bidirectional_align(g, fail, quiet(), AlignmentPrompts::load_default());
    CHECK(r.accepted.empty());
    CHECK(r.undecided == r.judged);
    CHECK(r.judged > 0);
}

TEST_CASE("merge collapses aligned pairs into one merged scenario") {
    const auto g = near_miss_graph();
    MockCompatibilityJudge judge;
    const auto r = bidirectional_align(g, judge, quiet(), AlignmentPrompts::load_default());
    MockScenarioMerger merger;
    const auto m = merge_aligned(g, r.accepted, merger);
    CHECK(m.merged_groups == 1);
    CHECK(m.graph.node_count() == 3);
    bool found = false;
    for (const auto& [id, s] : m.graph.scenarios()) {
        if (s.provenance == Provenance::Merged) {
            found = true;
            CHECK(s.text == "one merged access log file");
            CHECK(m.graph.in_edges(id).size() == 1);
            CHECK(m.graph.out_edges(id).size() == 1);
        }
    }
    CHECK(found);
    m.graph.check_invariants();

    FailingProvider fail;
    const auto kept = merge_aligned(g, r.accepted, fail, {0, std::chrono::milliseconds(0)});
    CHECK(kept.failed_groups == 1);
    CHECK(kept.graph.node_count() == 4);
}

TEST_CASE("triple filter drops self-loops and marks survivors verified") {
    SkillGraph g;
    g.add_scenario({"a", "state a", {}, {}});
    g.add_scenario({"b", "state b", {}, {}});
    g.add_skill(skill("k"));
    g.add_transition({"a", "k", "a", false});
    g.add_transition({"a", "k", "b", false});
    MockTripleJudge judge;
    const auto r = filter_triples(g, judge, "{{{src}}}");
    CHECK(r.removed == 1);
    CHECK(r.graph.transition_count() == 1);
    CHECK(r.graph.transitions().at({"a", "k", "b"}));

    FailingProvider fail;
    const auto u = filter_triples(g, fail, "{{{src}}}", 1, {0, std::chrono::milliseconds(0)});
    CHECK(u.unverified == 2);
    CHECK(u.removed == 0);
    CHECK_FALSE(u.graph.transitions().at({"a", "k", "b"}));
}
