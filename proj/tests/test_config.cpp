#include <doctest.h>

#include "skillsynth/config.hpp"
#include "skillsynth/errors.hpp"

using namespace skillsynth;

namespace {

const std::string kStages = R"(stages:
  ingest: {seed: 1}
  filter: {seed: 2}
  infer: {seed: 3}
  dedup: {seed: 4}
  align: {seed: 5}
  freeze: {seed: 6}
  sample: {seed: 7, l_min: 2, l_max: 4, budget: 50}
  synth: {seed: 8}
  stats: {seed: 9}
  diversity: {seed: 10}
)";

std::string message_of(const std::string& yaml) {
    try {
        parse_config(yaml, "/base");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("minimal config parses with per-stage seeds") {
    const auto cfg = parse_config("work_dir: out\n" + kStages, "/base");
    CHECK(cfg.work_dir == std::filesystem::path("/base/out"));
    CHECK(cfg.seed("ingest") == 1);
    CHECK(cfg.seed("diversity") == 10);
    CHECK(cfg.sample.seed == 7);
    CHECK(cfg.sample.min_length == 2);
    CHECK(cfg.sample.max_length == 4);
    CHECK(cfg.harness.options.seed == 8);
    CHECK(cfg.providers.kind == "mock");
}

TEST_CASE("every stage needs a seed") {
    std::string yaml = "work_dir: out\n" + kStages;
    yaml.replace(yaml.find("  freeze: {seed: 6}\n"), 19, "");
    CHECK(message_of(yaml).find("stages.freeze.seed") != std::string::npos);
    CHECK(message_of("work_dir: out\n").find("seed") != std::string::npos);
}

TEST_CASE("unknown keys are reported with their line") {
    const auto msg = message_of("work_dir: out\nproviders:\n  kind: mock\n  temprature: 0.3\n" + kStages);
    CHECK(msg.find("providers.temprature") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
}

TEST_CASE("bad values are config errors") {
    CHECK_FALSE(message_of("work_dir: out\nproviders: {kind: carrier-pigeon}\n" + kStages).empty());
    CHECK_FALSE(message_of("work_dir: out\nproviders: {kind: http}\n" + kStages).empty());
    CHECK_FALSE(message_of("work_dir: [unterminated\n").empty());
    std::string yaml = "work_dir: out\n" + kStages;
    yaml.replace(yaml.find("l_min: 2"), 8, "l_min: 9");
    CHECK_FALSE(message_of(yaml).empty());
}

TEST_CASE("seed override reaches every stage") {
    auto cfg = parse_config("work_dir: out\n" + kStages, "/base");
    apply_seed_override(cfg, 99);
    for (const auto* stage : kStageNames) CHECK(cfg.seed(stage) == 99);
    CHECK(cfg.sample.seed == 99);
    CHECK(cfg.harness.options.seed == 99);
    CHECK(stage_params(cfg, "sample").at("seed") == 99);
}

TEST_CASE("stage params change when a relevant setting changes") {
    auto a = parse_config("work_dir: out\n" + kStages, "/base");
    auto b = a;
    b.sample.budget = 51;
    CHECK(stage_params(a, "sample") != stage_params(b, "sample"));
    CHECK(stage_params(a, "dedup") == stage_params(b, "dedup"));
}
