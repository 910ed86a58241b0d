#include <doctest.h>

#include "skillsynth/errors.hpp"
#include "skillsynth/graph.hpp"
#include "support/graphs.hpp"
#include "support/oracles.hpp"

using namespace skillsynth;
using testsupport::kid;
using testsupport::make_graph;
using testsupport::sid;

namespace {

SkillGraph chain4() { return make_graph(4, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}}); }

} // namespace

TEST_CASE("frozen graph rejects mutation") {
    auto g = chain4();
    CHECK(g.frozen());
    CHECK_THROWS_AS(g.add_transition({sid(0), kid(0), sid(2), false}), DataError);
    auto t = g.thawed_copy();
    CHECK(t.add_transition({sid(0), kid(0), sid(2), false}));
    CHECK_FALSE(t.add_transition({sid(0), kid(0), sid(2), true}));
    CHECK(t.transitions().at({sid(0), kid(0), sid(2)}));
    CHECK(t.indices_consistent());
}

TEST_CASE("dangling endpoints are refused") {
    SkillGraph g;
    g.add_scenario({"a", "state a", {}, {}});
    CHECK_THROWS_AS(g.add_transition({"a", "k", "a", false}), DataError);
    CHECK_THROWS_AS(g.add_scenario({"b", "", {}, {}}), DataError);
}

TEST_CASE("re-adding a scenario from the other role marks it merged") {
    SkillGraph g;
    g.add_scenario({"a", "state a", Provenance::InferredPre, {}});
    g.add_scenario({"a", "state a", Provenance::InferredPost, {}});
    CHECK(g.scenario("a").provenance == Provenance::Merged);
}

TEST_CASE("out_edges honours exclusions") {
    auto g = make_graph(3, 2, {{0, 0, 1}, {0, 1, 2}, {0, 0, 2}});
    CHECK(g.out_edges(sid(0)).size() == 3);
    CHECK(g.out_edges(sid(0), {sid(2)}).size() == 1);
    CHECK(g.out_edges(sid(0), {}, {kid(0)}).size() == 1);
    CHECK(g.in_edges(sid(2)).size() == 2);
}

TEST_CASE("json lines round trip is byte identical") {
    auto g = make_graph(5, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}, {3, 0, 4}, {4, 1, 4}});
    const auto text = to_json_lines(g);
    const auto back = graph_from_json_lines(text);
    CHECK(to_json_lines(back) == text);
    CHECK(back.transition_count() == 5);
    back.check_invariants();
}

TEST_CASE("malformed json lines name the line") {
    try {
        graph_from_json_lines("not json\n", "g.jsonl");
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("g.jsonl") != std::string::npos);
    }
}

TEST_CASE("stats on a four-scenario chain") {
    const auto s = compute_stats(chain4());
    CHECK(s.node_count == 4);
    CHECK(s.transition_count == 3);
    CHECK(s.roles.source_only == 1);
    CHECK(s.roles.sink_only == 1);
    CHECK(s.roles.bridge == 2);
    CHECK(s.roles.isolated == 0);
    CHECK(s.components == std::vector<std::size_t>{4});
    CHECK(s.giant_fraction == doctest::Approx(1.0));
    CHECK(s.degree.mean == doctest::Approx(1.5));
    CHECK(s.degree.median == 1);
    CHECK(s.degree.max == 2);
    CHECK(degree_sequence(chain4()) == std::vector<std::size_t>{1, 2, 2, 1});
}

TEST_CASE("isolated scenarios and components") {
    auto g = make_graph(5, 2, {{0, 0, 1}, {2, 1, 3}});
    const auto s = compute_stats(g);
    CHECK(s.roles.isolated == 1);
    CHECK(s.components == std::vector<std::size_t>{2, 2, 1});
    CHECK(s.giant_fraction == doctest::Approx(0.4));
}

TEST_CASE("path counts: frozen values and brute force") {
    CHECK(count_simple_monotone_paths(chain4(), 1, 7) == 6);
    CHECK(count_simple_monotone_paths(chain4(), 2, 2) == 2);
    CHECK(count_simple_monotone_paths(chain4(), 3, 3) == 1);
    // two parallel skills between the same pair double the one-step paths
    std::vector<testsupport::Edge3> e = {{0, 0, 1}, {0, 1, 1}, {1, 0, 2}};
    auto g = make_graph(3, 2, e);
    CHECK(count_simple_monotone_paths(g, 1, 7) == 4);  // k0, k1, k0 (1->2), k1 then k0
    CHECK(testsupport::brute_force_path_count(3, e, 1, 7) == 4);
    CHECK_THROWS_AS(count_simple_monotone_paths(g, 1, 7, 2), DataError);
}

TEST_CASE("three-scenario chain roles and degrees") {
    const auto s = compute_stats(make_graph(3, 2, {{0, 0, 1}, {1, 1, 2}}));
    CHECK(s.roles.source_only == 1);
    CHECK(s.roles.sink_only == 1);
    CHECK(s.roles.bridge == 1);
    CHECK(s.components == std::vector<std::size_t>{3});
    CHECK(s.degree.mean == doctest::Approx(4.0 / 3.0));
    CHECK(s.degree.median == 1);
    CHECK(s.degree.max == 2);
}
