// Runs the ten acceptance checks and prints one PASS/FAIL line for each.
// Exit status is non-zero if any check fails or overruns its time limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "skillsynth/clustering.hpp"
#include "skillsynth/config.hpp"
#include "skillsynth/diversity.hpp"
#include "skillsynth/fs_util.hpp"
#include "skillsynth/graph.hpp"
#include "skillsynth/harness.hpp"
#include "skillsynth/mock_providers.hpp"
#include "skillsynth/pipeline.hpp"
#include "skillsynth/sampler.hpp"
#include "skillsynth/sandbox.hpp"
#include "support/graphs.hpp"
#include "support/oracles.hpp"
#include "support/scripted.hpp"

namespace fs = std::filesystem;
using namespace skillsynth;
using namespace testsupport;

namespace {

// ---- pinned limits and tolerances ----
constexpr int kSoundnessGraphs = 200;
constexpr int kSoundnessMaxNodes = 50;
constexpr int kSoundnessMaxEdges = 150;
constexpr std::size_t kSoundnessBudget = 300;

constexpr int kDraws = 30'000;
constexpr double kSigmas = 3.0;

constexpr int kHubTrials = 20;
constexpr int kHubRequiredWins = 19;
constexpr std::size_t kHubTarget = 1000;
constexpr std::size_t kHubBudget = 20'000;
constexpr std::uint64_t kHubSeedBase = 1000;

constexpr int kCountGraphs = 100;
constexpr int kCountMaxNodes = 8;
constexpr int kCountMaxEdges = 20;

constexpr int kLinkageSets = 100;
constexpr int kLinkageMaxVectors = 200;
constexpr int kLinkageDim = 32;
constexpr double kLinkageThreshold = 0.15;
constexpr double kDiameterSlack = 1e-9;  // float rows, distances in double

constexpr int kLouvainRuns = 5;
constexpr double kModularityTolerance = 1e-12;

constexpr std::size_t kMaxCycles = 3;
constexpr std::size_t kMaxToolCalls = 20;
constexpr double kSummaryTolerance = 1e-12;

constexpr auto kSandboxTimeout = std::chrono::seconds(2);

const fs::path kFixtures = SKILLSYNTH_FIXTURES_DIR;

// Measured quantities a passing check wants printed beside its verdict.
std::string g_note;

struct Check {
    int id;
    std::string name;
    double limit_s;
    std::function<std::string()> run;  // empty string means pass
};

std::string format_num(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        path_ = fs::temp_directory_path() / ("skillsynth-accept-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// ---- 1 ----
std::string sampler_soundness() {
    std::mt19937_64 gen(20240601);
    std::size_t accepted = 0;
    for (int t = 0; t < kSoundnessGraphs; ++t) {
        const auto rg = random_graph(gen, kSoundnessMaxNodes, kSoundnessMaxEdges);
        const auto g = make_graph(rg.scenarios, rg.skills, rg.edges);
        PathConfig cfg;
        cfg.min_length = std::uniform_int_distribution<std::size_t>(1, 3)(gen);
        cfg.max_length = std::uniform_int_distribution<std::size_t>(cfg.min_length, 7)(gen);
        cfg.budget = kSoundnessBudget;
        cfg.seed = gen();
        const FrozenGraph fg(g);
        const auto res = sample_paths(fg, cfg);
        if (res.paths.size() > cfg.budget) return "graph " + std::to_string(t) + ": more paths than walk attempts";
        if (res.attempts != cfg.budget) return "graph " + std::to_string(t) + ": attempts != budget";
        const auto problem = validate_paths(g, res.paths, cfg.min_length, cfg.max_length);
        if (!problem.empty()) return "graph " + std::to_string(t) + ": " + problem;

        // counters must equal a recount over the accepted paths
        std::vector<std::uint64_t> visits(fg.scenario_count(), 0), uses(fg.skill_count(), 0);
        for (const auto& p : res.paths) {
            for (const auto& s : p.scenarios) ++visits[*fg.scenario_index(s)];
            for (const auto& k : p.skills) ++uses[*fg.skill_index(k)];
        }
        if (visits != res.counters.scenario_visits || uses != res.counters.skill_uses) {
            return "graph " + std::to_string(t) + ": coverage counters disagree with accepted paths";
        }
        accepted += res.paths.size();
    }
    if (accepted == 0) return "no path accepted on any graph";
    g_note = std::to_string(accepted) + " accepted paths validated";
    return {};
}

// ---- 2 ----
struct WeightedFixture {
    std::string name;
    int scenarios;
    int skills;
    std::vector<Edge3> edges;
    std::vector<std::uint64_t> visits;
    std::vector<std::uint64_t> uses;
    int at;
    std::vector<int> walked_scenarios;
    std::vector<int> used_skills;
};

std::vector<WeightedFixture> weighted_fixtures() {
    return {
        {"fan-out",
         5, 4,
         {{0, 0, 1}, {0, 0, 2}, {0, 1, 3}, {0, 2, 3}, {0, 2, 4}, {0, 3, 0}},
         {4, 0, 1, 3, 7},
         {0, 2, 5, 1},
         0, {0}, {}},
        {"mid-walk",
         6, 5,
         {{2, 0, 1}, {2, 1, 3}, {2, 1, 4}, {2, 1, 5}, {2, 2, 0}, {2, 3, 4}, {2, 4, 5}, {1, 0, 2}},
         {9, 2, 6, 0, 11, 4},
         {3, 8, 0, 1, 30},
         2, {0, 1, 2}, {0}},
        {"skewed",
         4, 3,
         {{3, 0, 0}, {3, 0, 1}, {3, 0, 2}, {3, 1, 2}, {3, 2, 1}},
         {0, 99, 24, 1},
         {49, 0, 4},
         3, {3}, {}},
    };
}

double g_worst_z = 0.0;

// |observed - expected| <= kSigmas * sqrt(n p (1 - p)) for every cell.
std::string binomial_check(const std::map<std::pair<int, int>, double>& expected,
                           const std::map<std::pair<int, int>, int>& observed, const std::string& what) {
    for (const auto& [cell, _] : observed) {
        if (!expected.contains(cell)) return what + ": drew an impossible outcome";
    }
    for (const auto& [cell, p] : expected) {
        const auto it = observed.find(cell);
        const double got = it == observed.end() ? 0.0 : it->second;
        const double mean = kDraws * p;
        const double sd = std::sqrt(kDraws * p * (1.0 - p));
        if (sd > 0.0) g_worst_z = std::max(g_worst_z, std::abs(got - mean) / sd);
        if (std::abs(got - mean) > kSigmas * sd) {
            return what + format_num(": count %.0f vs expected %.1f (3 sigma = %.1f)", got, mean, kSigmas * sd);
        }
    }
    return {};
}

std::string sampling_distribution() {
    std::uint64_t seed = 77;
    g_worst_z = 0.0;
    std::size_t cells = 0;
    for (const auto& f : weighted_fixtures()) {
        const auto g = make_graph(f.scenarios, f.skills, f.edges);
        const FrozenGraph fg(g);
        CoverageCounters c = CoverageCounters::zeros(fg);
        c.scenario_visits = f.visits;
        c.skill_uses = f.uses;

        // sources: every scenario, weight 1 / (visits + 1)
        std::map<std::pair<int, int>, double> exp_src;
        double z = 0.0;
        for (auto v : f.visits) z += 1.0 / (static_cast<double>(v) + 1.0);
        for (int i = 0; i < f.scenarios; ++i) exp_src[{i, 0}] = 1.0 / (static_cast<double>(f.visits[i]) + 1.0) / z;
        std::map<std::pair<int, int>, int> obs_src;
        Rng rng(seed++);
        for (int d = 0; d < kDraws; ++d) ++obs_src[{static_cast<int>(sample_source(fg, c, rng)), 0}];
        if (auto e = binomial_check(exp_src, obs_src, f.name + " source"); !e.empty()) return e;

        // steps: skill by 1 / (uses + 1) among skills with a fresh destination,
        // then destination by 1 / (visits + 1) among that skill's fresh ones
        const std::set<int> walked(f.walked_scenarios.begin(), f.walked_scenarios.end());
        const std::set<int> used(f.used_skills.begin(), f.used_skills.end());
        std::map<int, std::set<int>> dsts;
        for (const auto& [s, k, d] : f.edges) {
            if (s == f.at && !walked.contains(d) && !used.contains(k)) dsts[k].insert(d);
        }
        double zk = 0.0;
        for (const auto& [k, _] : dsts) zk += 1.0 / (static_cast<double>(f.uses[k]) + 1.0);
        std::map<std::pair<int, int>, double> exp_step;
        for (const auto& [k, ds] : dsts) {
            const double pk = 1.0 / (static_cast<double>(f.uses[k]) + 1.0) / zk;
            double zd = 0.0;
            for (int d : ds) zd += 1.0 / (static_cast<double>(f.visits[d]) + 1.0);
            for (int d : ds) exp_step[{k, d}] = pk / (static_cast<double>(f.visits[d]) + 1.0) / zd;
        }
        WalkExclusions ex = WalkExclusions::none(fg);
        for (int s : f.walked_scenarios) ex.scenarios[s] = 1;
        for (int k : f.used_skills) ex.skills[k] = 1;
        std::map<std::pair<int, int>, int> obs_step;
        for (int d = 0; d < kDraws; ++d) {
            const auto st = sample_step(fg, static_cast<std::uint32_t>(f.at), c, ex, rng);
            if (!st) return f.name + ": unexpected dead end";
            ++obs_step[{static_cast<int>(st->skill), static_cast<int>(st->dst)}];
        }
        if (auto e = binomial_check(exp_step, obs_step, f.name + " step"); !e.empty()) return e;
        cells += exp_src.size() + exp_step.size();
    }
    g_note = std::to_string(cells) + " cells, largest deviation " + format_num("%.2f sigma", g_worst_z);
    return {};
}

// ---- 3 ----
std::string hub_coverage() {
    const auto g = hub_and_spoke();
    const FrozenGraph fg(g);
    int wins = 0;
    double sum_inv = 0.0, sum_uni = 0.0;
    std::string detail;
    for (int t = 0; t < kHubTrials; ++t) {
        PathConfig cfg;
        cfg.min_length = 1;
        cfg.max_length = 7;
        cfg.budget = kHubBudget;
        cfg.max_accepted = kHubTarget;
        cfg.seed = kHubSeedBase + static_cast<std::uint64_t>(t);
        cfg.weighting = Weighting::InverseFrequency;
        const auto inv = sample_paths(fg, cfg);
        cfg.weighting = Weighting::Uniform;
        const auto uni = sample_paths(fg, cfg);
        if (inv.paths.size() != kHubTarget || uni.paths.size() != kHubTarget) {
            return "trial " + std::to_string(t) + ": fewer than 1000 accepted paths";
        }
        const double hi = pair_entropy(inv.paths), hu = pair_entropy(uni.paths);
        sum_inv += hi;
        sum_uni += hu;
        if (std::abs(hi - coverage_report(inv.paths).entropy) > 1e-12) return "library entropy disagrees with oracle";
        if (hi >= hu) ++wins;
        else detail += format_num(" [trial %.0f: %.4f < %.4f]", t, hi, hu);
    }
    if (wins < kHubRequiredWins) return std::to_string(wins) + "/20 wins" + detail;
    g_note = std::to_string(wins) + "/20 trials inverse >= uniform" +
             format_num(", mean entropy %.4f vs %.4f", sum_inv / kHubTrials, sum_uni / kHubTrials);
    return {};
}

// ---- 4 ----
std::string path_count_oracle() {
    std::mt19937_64 gen(8675309);
    for (int t = 0; t < kCountGraphs; ++t) {
        const auto rg = random_graph(gen, kCountMaxNodes, kCountMaxEdges);
        const auto g = make_graph(rg.scenarios, rg.skills, rg.edges);
        const std::size_t lo = std::uniform_int_distribution<std::size_t>(1, 3)(gen);
        const std::size_t hi = std::uniform_int_distribution<std::size_t>(lo, 7)(gen);
        for (auto [a, b] : {std::pair<std::size_t, std::size_t>{1, 7}, {lo, hi}}) {
            const auto got = count_simple_monotone_paths(g, a, b);
            const auto want = brute_force_path_count(rg.scenarios, rg.edges, a, b);
            if (got != want) {
                return "graph " + std::to_string(t) + ": " + std::to_string(got) + " != " + std::to_string(want);
            }
        }
    }
    return {};
}

// ---- 5 ----
EmbeddingTable gram_chain(const std::vector<std::string>& ids) {
    // A, B, C at angles 0, t, 2t with cos t = 0.9: d(A,B) = d(B,C) = 0.1,
    // d(A,C) = 1 - cos 2t = 0.38
    const double t = std::acos(0.9);
    EmbeddingMatrix m = EmbeddingMatrix::Zero(3, kLinkageDim);
    for (int i = 0; i < 3; ++i) {
        m(i, 0) = static_cast<float>(std::cos(i * t));
        m(i, 1) = static_cast<float>(std::sin(i * t));
    }
    return EmbeddingTable(ids, m);
}

std::string complete_linkage_certificate() {
    std::mt19937_64 gen(31337);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t merges = 0;
    for (int t = 0; t < kLinkageSets; ++t) {
        const int n = std::uniform_int_distribution<int>(2, kLinkageMaxVectors)(gen);
        const int centers = std::uniform_int_distribution<int>(1, std::max(1, n / 4))(gen);
        const double spread = std::uniform_real_distribution<double>(0.05, 0.5)(gen);
        std::vector<Eigen::VectorXd> c(centers);
        for (auto& v : c) {
            v = Eigen::VectorXd(kLinkageDim);
            for (int d = 0; d < kLinkageDim; ++d) v(d) = normal(gen);
            v.normalize();
        }
        std::vector<std::string> ids;
        EmbeddingMatrix m(n, kLinkageDim);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd v = c[std::uniform_int_distribution<int>(0, centers - 1)(gen)];
            for (int d = 0; d < kLinkageDim; ++d) v(d) += spread * normal(gen) / std::sqrt(kLinkageDim);
            v.normalize();
            m.row(i) = v.cast<float>().transpose();
            ids.push_back("v" + std::to_string(1000 + i));
        }
        normalize_rows(m);
        const EmbeddingTable table(ids, m);

        const auto direct = complete_linkage_merge(ids, table, kLinkageThreshold);
        const double d1 = max_cluster_diameter(direct, table);
        if (d1 > kLinkageThreshold + kDiameterSlack) return format_num("set %.0f: direct diameter %.6f", t, d1);

        DedupParams p;
        p.distance_threshold = kLinkageThreshold;
        p.seed = static_cast<std::uint64_t>(t);
        const auto full = deduplicate(table, p);
        const double d2 = max_cluster_diameter(full.assignment, table);
        if (d2 > kLinkageThreshold + kDiameterSlack) return format_num("set %.0f: dedup diameter %.6f", t, d2);
        for (const auto& [member, canon] : full.assignment.canonical_of) merges += member != canon;
    }
    if (merges == 0) return "no vector was ever merged; certificate is vacuous";
    g_note = std::to_string(merges) + " vectors merged across the random sets";

    // chain drift under every id ordering
    std::vector<std::string> names = {"a", "b", "c"};
    do {
        const auto table = gram_chain(names);
        const auto& A = names[0];
        const auto& C = names[2];
        const auto direct = complete_linkage_merge(names, table, kLinkageThreshold);
        if (direct.canonical_of.at(A) == direct.canonical_of.at(C)) return "chain drift: A merged with C (direct)";
        DedupParams p;
        p.distance_threshold = kLinkageThreshold;
        p.sim_floor = 0.0;
        const auto full = deduplicate(table, p);
        if (full.assignment.canonical_of.at(A) == full.assignment.canonical_of.at(C)) {
            return "chain drift: A merged with C (dedup)";
        }
        if (direct.is_identity()) return "chain drift: B merged with neither neighbour";
    } while (std::next_permutation(names.begin(), names.end()));
    return {};
}

// ---- 6 ----
SimilarityGraph two_cliques() {
    SimilarityGraph g;
    for (int i = 0; i < 10; ++i) g.ids.push_back("n" + std::to_string(i));
    for (std::uint32_t a = 0; a < 10; ++a) {
        for (std::uint32_t b = a + 1; b < 10; ++b) {
            if ((a < 5) == (b < 5)) g.edges.push_back({a, b, 0.9});
        }
    }
    g.edges.push_back({4, 5, 0.75});
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    return g;
}

std::string louvain_sanity() {
    const auto g = two_cliques();
    const auto p = louvain_partition(g, 42);
    for (int i = 1; i < 5; ++i) {
        if (p[i] != p[0]) return "first clique split";
        if (p[5 + i] != p[5]) return "second clique split";
    }
    if (p[0] == p[5]) return "cliques merged";
    Partition singletons(10), whole(10, 0);
    for (std::uint32_t i = 0; i < 10; ++i) singletons[i] = i;
    const double q = dense_modularity(g, p);
    const double qs = dense_modularity(g, singletons);
    const double qw = dense_modularity(g, whole);
    if (!(q > qs && q > qw)) return format_num("modularity %.6f not above singleton %.6f and whole %.6f", q, qs, qw);
    if (std::abs(q - modularity(g, p)) > kModularityTolerance) return "library modularity disagrees with oracle";
    for (int r = 0; r < kLouvainRuns; ++r) {
        if (louvain_partition(g, 42) != p) return "partition changed across runs with the same seed";
    }
    return {};
}

// ---- 7 ----
HarnessConfig harness_config() {
    HarnessConfig cfg;
    cfg.max_cycles = kMaxCycles;
    cfg.max_tool_calls = kMaxToolCalls;
    cfg.timeout = std::chrono::seconds(10);
    cfg.retry.retries = 0;
    cfg.retry.base_backoff = std::chrono::milliseconds(0);
    return cfg;
}

struct ScriptRun {
    SynthesisResult result;
    std::size_t max_cycle;
    std::size_t max_call_index;
};

ScriptRun run_script(Script s, bool rubric_accepts, SandboxExecutor& exec, const std::string& tag) {
    ScriptedPlanner planner;
    ScriptedConstructor constructor(s);
    ScriptedRubric rubric(rubric_accepts);
    auto r = synthesize(one_step_path(tag), {planner, constructor, rubric, exec}, harness_config());
    return {std::move(r), constructor.max_cycle, constructor.max_call_index};
}

std::string harness_budget_and_classification() {
    ScratchDir scratch("harness");
    TempDirExecutor exec(scratch.path());

    // budget: adversaries never finish
    for (int i = 0; i < 3; ++i) {
        const auto run = run_script(Script::Adversary, true, exec, "adv" + std::to_string(i));
        const auto& r = run.result;
        if (r.budget.used_cycles > kMaxCycles || run.max_cycle > kMaxCycles) return "adversary exceeded cycle budget";
        // the 21st request may still be answered with finish; anything else is refused unexecuted
        if (run.max_call_index > kMaxToolCalls) return "adversary was asked past call index 20";
        std::map<std::size_t, std::size_t> executed;
        for (const auto& e : r.audit) {
            if (e.at("event") == "tool_call") ++executed[e.at("cycle").get<std::size_t>()];
        }
        for (const auto& [cycle, n] : executed) {
            if (n > kMaxToolCalls) return "more than 20 tool calls executed in cycle " + std::to_string(cycle);
        }
        for (auto n : r.budget.tool_calls) {
            if (n > kMaxToolCalls) return "adversary recorded more than 20 calls in a cycle";
        }
        if (executed.size() != kMaxCycles || executed.begin()->second != kMaxToolCalls) {
            return "adversary did not exhaust the budget as expected";
        }
        if (r.outcome != OutcomeClass::Failed) return "adversary did not end Failed";
    }

    const auto recover = run_script(Script::RecoverCycle2, true, exec, "rec");
    if (recover.result.outcome != OutcomeClass::AllPassed || recover.result.budget.used_cycles != 2) {
        return "recover-on-cycle-2 not classified all_passed after 2 cycles";
    }
    const auto rubric_fail = run_script(Script::RubricFail, false, exec, "rub");
    if (rubric_fail.result.outcome != OutcomeClass::OraclePassedOnly) return "oracle-pass/rubric-fail misclassified";
    const auto fail = run_script(Script::AlwaysFail, true, exec, "fail");
    if (fail.result.outcome != OutcomeClass::Failed) return "always-fail misclassified";
    for (const auto* r : {&recover.result, &rubric_fail.result, &fail.result}) {
        if (classify_from_audit(r->audit) != r->outcome) return "audit replay disagrees with the live outcome";
    }

    // ten scripted runs: 6 pass, 2 recover, 1 rubric-fail, 1 fail
    std::vector<SynthesisResult> results;
    for (int i = 0; i < 6; ++i) results.push_back(run_script(Script::Pass, true, exec, "p" + std::to_string(i)).result);
    for (int i = 0; i < 2; ++i) {
        results.push_back(run_script(Script::RecoverCycle2, true, exec, "r" + std::to_string(i)).result);
    }
    results.push_back(run_script(Script::RubricFail, false, exec, "o").result);
    results.push_back(run_script(Script::AlwaysFail, true, exec, "f").result);
    const auto s = outcome_summary(results);
    // hand-computed: cycles 6*1 + 2*2 + 3 + 3 = 16, tool calls 5 per cycle
    const bool ok = s.total == 10 && s.aborted == 0 && s.all_passed == 8 && s.oracle_passed_only == 1 &&
                    s.failed == 1 && std::abs(s.all_passed_pct - 80.0) <= kSummaryTolerance &&
                    std::abs(s.oracle_passed_only_pct - 10.0) <= kSummaryTolerance &&
                    std::abs(s.failed_pct - 10.0) <= kSummaryTolerance &&
                    std::abs(s.avg_cycles - 1.6) <= kSummaryTolerance &&
                    std::abs(s.avg_tool_calls - 8.0) <= kSummaryTolerance && s.recovered == 3;
    if (!ok) return "outcome summary mismatch: " + outcome_summary_to_json(s);
    return {};
}

// ---- 8 ----
std::set<std::string> listing(const fs::path& dir, bool recursive) {
    std::set<std::string> out;
    std::error_code ec;
    if (!fs::exists(dir, ec)) return out;
    if (recursive) {
        for (auto it = fs::recursive_directory_iterator(dir, fs::directory_options::skip_permission_denied, ec);
             it != fs::recursive_directory_iterator(); it.increment(ec)) {
            out.insert(fs::relative(it->path(), dir).string());
        }
    } else {
        for (const auto& e : fs::directory_iterator(dir, ec)) out.insert(e.path().filename().string());
    }
    return out;
}

TaskInstance sandbox_fixture(const std::string& solution, const std::string& test) {
    TaskInstance inst;
    inst.instruction = "sandbox fixture";
    inst.snapshot["README.md"] = "fixture\n";
    inst.env_spec = "base: debian:bookworm-slim\n";
    inst.oracle_solution["solve.sh"] = solution;
    inst.verify_scripts["test.sh"] = test;
    return inst;
}

std::string sandbox_execution() {
    ScratchDir scratch("sandbox");
    const auto root = scratch.path() / "root";
    const auto outside = scratch.path() / "outside";
    fs::create_directories(root);
    fs::create_directories(outside);
    const auto home = fs::path(std::getenv("HOME") ? std::getenv("HOME") : "/");
    const auto tmp = fs::temp_directory_path();
    const auto before_home = listing(home, false);
    const auto before_tmp = listing(tmp, false);
    const auto before_cwd = listing(fs::current_path(), false);

    TempDirExecutor exec(root);
    // also writes through HOME and TMPDIR, which must resolve inside the workdir
    const auto exists = sandbox_fixture(
        "#!/bin/sh\necho hello > out.txt\necho probe > \"$HOME/.probe\"\necho probe > \"$TMPDIR/probe\"\n",
        "#!/bin/sh\ntest -f out.txt && test -f \"$HOME/.probe\" && test -f \"$TMPDIR/probe\"\n");
    const auto r1 = verify_execution(exists, exec, kSandboxTimeout);
    if (!r1.passed) return "file-exists fixture failed: " + r1.log;

    const auto r2 = verify_execution(sandbox_fixture("#!/bin/sh\ntrue\n", "#!/bin/sh\nexit 1\n"), exec, kSandboxTimeout);
    if (r2.passed || r2.exit_code != 1 || r2.timed_out) return "exit-1 fixture did not fail with exit code 1";

    const auto t0 = std::chrono::steady_clock::now();
    const auto r3 = verify_execution(sandbox_fixture("#!/bin/sh\nsleep 30\n", "#!/bin/sh\ntrue\n"), exec, kSandboxTimeout);
    const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r3.passed || !r3.timed_out) return "sleep fixture did not time out";
    if (waited > 5.0) return format_num("sleep fixture took %.2f s to be killed", waited);

    // watcher: nothing left behind or created next to the sandbox
    if (!listing(root, true).empty()) return "executor root not empty after runs";
    if (!listing(outside, true).empty()) return "file appeared beside the executor root";
    auto fresh = [](const std::set<std::string>& before, const std::set<std::string>& after) {
        for (const auto& f : after) {
            if (!before.contains(f) && (f.find("probe") != std::string::npos || f == "out.txt")) return f;
        }
        return std::string{};
    };
    if (auto f = fresh(before_home, listing(home, false)); !f.empty()) return "created in HOME: " + f;
    if (auto f = fresh(before_tmp, listing(tmp, false)); !f.empty()) return "created in temp dir: " + f;
    if (listing(fs::current_path(), false) != before_cwd) return "current directory changed";
    return {};
}

// ---- 9 ----
std::string diversity_fixture() {
    auto trajs = trajectories_from_json_lines(read_file(kFixtures / "trajectories.jsonl"));
    if (trajs.size() != 10) return "fixture does not hold 10 trajectories";
    DiversityParams params;
    params.sample_size = 10;
    params.samples = 3;
    params.seed = 7;
    params.retry.base_backoff = std::chrono::milliseconds(0);
    MockSegmentExtractor extractor;
    MockEmbedder embedder;
    const auto prompts = DiversityPrompts::load_default();
    const auto base = diversity_report(trajs, params, extractor, embedder, prompts);
    for (const auto& s : base.per_sample) {
        if (s.unique_scenarios != 4 || s.unique_skills != 3 || s.unique_pairs != 5) {
            return "counts (" + std::to_string(s.unique_scenarios) + ", " + std::to_string(s.unique_skills) + ", " +
                   std::to_string(s.unique_pairs) + ") != (4, 3, 5)";
        }
    }
    if (base.mean_scenarios != 4.0 || base.mean_skills != 3.0 || base.mean_pairs != 5.0) return "means differ";
    const auto ref = diversity_report_to_json(base);
    std::mt19937_64 gen(5);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(trajs.begin(), trajs.end(), gen);
        if (diversity_report_to_json(diversity_report(trajs, params, extractor, embedder, prompts)) != ref) {
            return "report changed under input permutation " + std::to_string(i);
        }
    }
    return {};
}

// ---- 10 ----
std::string end_to_end_determinism() {
    ScratchDir scratch("e2e");
    auto base = load_config(kFixtures / "config.yaml");
    std::map<std::string, std::string> digests[2];
    for (int run = 0; run < 2; ++run) {
        auto cfg = base;
        cfg.work_dir = scratch.path() / ("run" + std::to_string(run));
        cfg.sandbox_root = scratch.path();
        run_all(cfg, {false, true});
        for (auto& [rel, sha] : digest_tree(cfg.work_dir, cfg.work_dir)) {
            if (rel.rfind("manifests/", 0) != 0) digests[run][rel] = sha;
        }
    }
    if (digests[0] != digests[1]) {
        for (const auto& [rel, sha] : digests[0]) {
            const auto it = digests[1].find(rel);
            if (it == digests[1].end() || it->second != sha) return "differs: " + rel;
        }
        return "file sets differ";
    }
    for (const char* must : {"graph.jsonl", "paths.jsonl", "outcome_summary.json", "stats/graph_stats.json",
                             "diversity_report.json", "instances/0000/instruction.md"}) {
        if (!digests[0].contains(must)) return std::string("missing output ") + must;
    }
    return {};
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<Check> checks = {
        {1, "path sampler soundness", 5.0, sampler_soundness},
        {2, "single-draw sampling distribution", 10.0, sampling_distribution},
        {3, "inverse-frequency coverage on hub-and-spoke", 30.0, hub_coverage},
        {4, "path count matches brute force", 5.0, path_count_oracle},
        {5, "complete-linkage diameter certificate", 20.0, complete_linkage_certificate},
        {6, "louvain two-clique sanity", 5.0, louvain_sanity},
        {7, "harness budget and classification", 10.0, harness_budget_and_classification},
        {8, "sandbox execution", 10.0, sandbox_execution},
        {9, "diversity report on scripted trajectories", 5.0, diversity_fixture},
        {10, "end-to-end determinism", 60.0, end_to_end_determinism},
    };
    int failures = 0;
    for (const auto& c : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string problem;
        g_note.clear();
        try {
            problem = c.run();
        } catch (const std::exception& e) {
            problem = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (problem.empty() && secs > c.limit_s) problem = format_num("took %.2f s, limit %.0f s", secs, c.limit_s);
        const bool pass = problem.empty();
        failures += !pass;
        const auto& extra = pass ? g_note : problem;
        std::printf("%s  %2d  %-46s %7.2fs / %4.0fs%s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    c.limit_s, extra.empty() ? "" : "  ", extra.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
    return failures == 0 ? 0 : 1;
}
