#include <doctest.h>

#include "skillsynth/diversity.hpp"
#include "skillsynth/errors.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/mock_providers.hpp"

using namespace skillsynth;

namespace {

Trajectory three_steps() {
    Trajectory t;
    t.id = "t";
    t.steps = {{"o1", "a1"}, {"o2", "a2"}, {"o3", "a3"}};
    return t;
}

class Canned : public SegmentExtractor {
public:
    explicit Canned(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string extract(const Trajectory&, const std::string&) override {
        return replies_[std::min(calls++, replies_.size() - 1)];
    }
    std::size_t calls = 0;

private:
    std::vector<std::string> replies_;
};

const std::string kGood = R"([{"step_range":[0,1],"scenario":"repo without tests","skill":"add a test suite"},
                             {"step_range":[2,2],"scenario":"failing tests","skill":"fix the bug"}])";

} // namespace

TEST_CASE("segment parsing accepts fenced output and checks ranges") {
    const auto s = parse_segments("```json\n" + kGood + "\n```", 3);
    REQUIRE(s.segments.size() == 2);
    CHECK(s.segments[0] == Segment{0, 1, "repo without tests", "add a test suite"});
    CHECK_THROWS_AS(parse_segments(kGood, 2), DataError);  // out of bounds
    CHECK_THROWS_AS(parse_segments(R"([{"step_range":[1,0],"scenario":"a","skill":"b"}])", 3), DataError);
    CHECK_THROWS_AS(parse_segments(R"([{"step_range":[0,1],"scenario":"a","skill":"b"},
                                       {"step_range":[1,2],"scenario":"a","skill":"b"}])", 3), DataError);
    CHECK_THROWS_AS(parse_segments(R"([{"step_range":[0,0],"scenario":"","skill":"b"}])", 3), DataError);
    const std::string long_text = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen";
    CHECK_THROWS_AS(parse_segments(R"([{"step_range":[0,0],"scenario":")" + long_text + R"(","skill":"b"}])", 3),
                    DataError);
    CHECK_THROWS_AS(parse_segments("not json", 3), DataError);
}

TEST_CASE("one re-ask on invalid output, then give up") {
    Canned recovers({"garbage", kGood});
    CHECK(segment(three_steps(), recovers, "{{{observation_action_sequence}}}").has_value());
    CHECK(recovers.calls == 2);

    Canned hopeless({"garbage"});
    std::string err;
    CHECK_FALSE(segment(three_steps(), hopeless, "x", {}, &err).has_value());
    CHECK(hopeless.calls == 2);
    CHECK_FALSE(err.empty());
}

TEST_CASE("render lists numbered observations and actions") {
    auto t = three_steps();
    t.goal = "ship it";
    const auto r = render_trajectory(t);
    CHECK(r.find("GOAL: ship it") != std::string::npos);
    CHECK(r.find("[2] ACTION: a3") != std::string::npos);
}

TEST_CASE("trajectory ids are derived from content when absent") {
    const auto a = trajectories_from_json_lines(R"({"steps":[{"observation":"o","action":"a"}]})");
    const auto b = trajectories_from_json_lines(R"({"steps":[{"observation":"o","action":"a"}]})");
    REQUIRE(a.size() == 1);
    CHECK_FALSE(a[0].id.empty());
    CHECK(a[0].id == b[0].id);
}

TEST_CASE("unparseable trajectories are skipped and counted") {
    std::vector<Trajectory> ts = {three_steps()};
    ts[0].id = "bad";
    DiversityParams p;
    p.sample_size = 5;
    p.samples = 2;
    p.retry = {0, std::chrono::milliseconds(0)};
    Canned never({"nope"});
    MockEmbedder e;
    const auto r = diversity_report(ts, p, never, e, DiversityPrompts::load_default());
    CHECK(r.skipped == 1);
    CHECK(r.per_sample.size() == 2);
    CHECK(r.per_sample[0].trajectories == 1);  // clamped
    CHECK(r.mean_pairs == 0.0);
}

TEST_CASE("report json round trip and strategy ratios") {
    DiversityReport a;
    a.sample_size = 10;
    a.sample_count = 3;
    a.mean_pairs = 6.0;
    a.per_sample = {{10, 0, 4, 3, 6, 8}};
    DiversityReport b = a;
    b.mean_pairs = 3.0;
    DiversityReport zero = a;
    zero.mean_pairs = 0.0;
    CHECK(diversity_report_to_json(diversity_report_from_json(diversity_report_to_json(a))) == diversity_report_to_json(a));
    const auto rows = compare_strategies({{"graph", a}, {"baseline", b}, {"empty", zero}});
    CHECK(rows.size() == 6);
    for (const auto& r : rows) {
        if (r.numerator == "graph" && r.denominator == "baseline") CHECK(*r.ratio == doctest::Approx(2.0));
        if (r.denominator == "empty") CHECK_FALSE(r.ratio.has_value());
    }
    CHECK(comparison_to_csv(rows).find("graph,baseline") != std::string::npos);
    DiversityReport other = a;
    other.sample_size = 20;
    CHECK_THROWS_AS(compare_strategies({{"x", a}, {"y", other}}), ConfigError);
}
