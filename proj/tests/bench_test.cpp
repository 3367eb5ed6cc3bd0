#include "ltlrl/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ltlrl;

namespace {

const std::filesystem::path kFixtures = LTLRL_FIXTURE_DIR;

nlohmann::json tiny_suite() {
    return nlohmann::json::parse(R"({
      "name": "tiny",
      "seeds": [3, 4, 5],
      "policies": ["eps_delta_greedy", "ucb1"],
      "workers": 2,
      "run": {"episodes": 12, "horizon": 60},
      "experiments": [
        {"name": "ras", "environment": {"type": "grid", "width": 3, "height": 3},
         "task": {"pattern": "reach_avoid_stay", "goal": 9, "obstacles": [5]}}
      ]
    })");
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

RunRecord record(std::vector<double> returns, std::vector<std::size_t> goals, std::uint64_t seed = 0) {
    RunRecord r;
    r.experiment = "x";
    r.seed = seed;
    r.returns = std::move(returns);
    r.goal_rewards = std::move(goals);
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Suite, SingleCellSingleEpisodeGivesOneRow) {
    const auto suite = suite_from_json(nlohmann::json::parse(R"({
      "seeds": [0], "policies": ["eps_greedy"], "run": {"episodes": 1, "horizon": 20},
      "experiments": [{"environment": {"type": "grid", "width": 3, "height": 3},
                       "task": {"pattern": "reach_avoid_stay", "goal": 9, "obstacles": [5]}}]})"));
    const auto result = run_suite(suite);
    ASSERT_EQ(result.runs.size(), 1u);
    EXPECT_FALSE(result.runs[0].error);
    EXPECT_EQ(count_lines(curves_csv(result)), 2u);
}

TEST(Suite, CellOrderAndCount) {
    const auto suite = suite_from_json(tiny_suite());
    const auto result = run_suite(suite);
    ASSERT_EQ(result.runs.size(), 6u);
    EXPECT_EQ(result.runs[0].policy, PolicyKind::eps_delta_greedy);
    EXPECT_EQ(result.runs[0].seed, 3u);
    EXPECT_EQ(result.runs[5].policy, PolicyKind::ucb1);
    EXPECT_EQ(result.runs[5].seed, 5u);
    EXPECT_FALSE(result.runs[0].policy_grid.empty());
    EXPECT_TRUE(result.runs[1].policy_grid.empty());
    for (const auto& r : result.runs) EXPECT_EQ(r.returns.size(), 12u);
}

TEST(Suite, DeterministicAcrossRunsAndWorkerCounts) {
    auto j = tiny_suite();
    const auto a = curves_csv(run_suite(suite_from_json(j)));
    const auto b = curves_csv(run_suite(suite_from_json(j)));
    j["workers"] = 1;
    const auto c = curves_csv(run_suite(suite_from_json(j)));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Suite, SummaryMatchesRawCurves) {
    const auto suite = suite_from_json(tiny_suite());
    const auto result = run_suite(suite);
    const auto curves = parse_curves_csv(curves_csv(result));
    const auto summary = suite_summary(suite, result);
    const auto& ex = summary.at("experiments").at(0);
    for (const std::string policy : {"eps_delta_greedy", "ucb1"}) {
        const auto& runs = curves.at({"ras", policy});
        ASSERT_EQ(runs.size(), 3u);
        const std::size_t n = runs[0].size();
        double last = 0.0, auc = 0.0;
        for (std::size_t e = 0; e < n; ++e) {
            double m = 0.0;
            for (const auto& r : runs) m += r[e];
            m /= 3.0;
            auc += m / static_cast<double>(n);
            if (e + 1 == n) last = m;
        }
        double var = 0.0;
        for (const auto& r : runs) var += (r.back() - last) * (r.back() - last) / 2.0;
        const auto& m = ex.at("policies").at(policy);
        EXPECT_NEAR(m.at("final_mean").get<double>(), last, 1e-12);
        EXPECT_NEAR(m.at("final_variance").get<double>(), var, 1e-12);
        EXPECT_NEAR(m.at("auc").get<double>(), auc, 1e-12);
        EXPECT_EQ(m.at("runs").get<std::size_t>(), 3u);
    }
    EXPECT_EQ(ex.at("ranking_by_final_mean").size(), 2u);
}

TEST(Suite, FailingCellIsRecordedAndOthersContinue) {
    auto j = tiny_suite();
    // accepting state 1 is unreachable from state 0
    j["experiments"].push_back(nlohmann::json::parse(R"({
      "name": "broken", "environment": {"type": "grid", "width": 2, "height": 1},
      "task": {"hoa_text": "HOA: v1\nStates: 2\nStart: 0\nAP: 1 \"p1\"\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[t] 0\nState: 1 {0}\n[t] 1\n--END--\n"}})"));
    const auto suite = suite_from_json(j);
    const auto result = run_suite(suite);
    ASSERT_EQ(result.runs.size(), 12u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_FALSE(result.runs[i].error);
    for (std::size_t i = 6; i < 12; ++i) {
        EXPECT_TRUE(result.runs[i].error);
        EXPECT_TRUE(result.runs[i].returns.empty());
    }
    const auto summary = suite_summary(suite, result);
    const auto& broken = summary.at("experiments").at(1).at("policies").at("ucb1");
    EXPECT_EQ(broken.at("runs").get<std::size_t>(), 0u);
    EXPECT_EQ(broken.at("errors").size(), 3u);
}

TEST(Suite, WritesOutputs) {
    const auto suite = suite_from_json(tiny_suite());
    const auto result = run_suite(suite);
    const auto dir = std::filesystem::temp_directory_path() / "ltlrl_bench_test";
    std::filesystem::remove_all(dir);
    write_suite_outputs(suite, result, dir);
    for (const char* f : {"curves.csv", "goal_rewards.csv", "aggregate.csv", "summary.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    EXPECT_EQ(slurp(dir / "curves.csv"), curves_csv(result));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "summary.json")).at("suite"), "tiny");
    std::filesystem::remove_all(dir);
}

TEST(Suite, SmokeFixtureParses) {
    const auto suite = suite_from_json(read_json_file(kFixtures / "smoke_suite.json"), kFixtures);
    ASSERT_EQ(suite.experiments.size(), 2u);
    EXPECT_EQ(suite.experiments[0].policies.size(), 4u);
    EXPECT_EQ(suite.experiments[1].policies.size(), 2u);
    EXPECT_EQ(cell_config(suite.experiments[0], PolicyKind::ucb1, 1).schedule.ucb_c, 2.0);
    EXPECT_EQ(cell_config(suite.experiments[0], PolicyKind::eps_greedy, 1).seed, 1u);
    EXPECT_EQ(cell_config(suite.experiments[0], PolicyKind::eps_greedy, 1).episodes, 30u);
}

TEST(Suite, ReferencePresetHasTwentyRunsPerExperiment) {
    const auto suite = preset_suite("reference");
    ASSERT_EQ(suite.experiments.size(), 4u);
    for (const auto& ex : suite.experiments) {
        EXPECT_EQ(ex.policies.size() * suite.seeds.size(), 20u);
        EXPECT_EQ(ex.base.run.episodes, 1000u);
    }
    EXPECT_FALSE(suite.long_running);
    EXPECT_TRUE(preset_suite("reach_avoid_2_long").long_running);
}

TEST(Suite, RejectsBadDocuments) {
    EXPECT_THROW(preset_suite("nope"), ConfigError);
    EXPECT_THROW(suite_from_json(nlohmann::json::array()), ConfigError);
    auto j = tiny_suite();
    j["seeds"] = nlohmann::json::array();
    EXPECT_THROW(suite_from_json(j), ConfigError);
    j = tiny_suite();
    j["policies"] = {"softmax"};
    EXPECT_THROW(suite_from_json(j), ConfigError);
    j = tiny_suite();
    j["policies"] = nlohmann::json::array();
    EXPECT_THROW(suite_from_json(j), ConfigError);
}

TEST(Metrics, AggregateMeanAndVariance) {
    const auto a = record({1.0, 2.0}, {0, 0});
    const auto b = record({3.0, 6.0}, {0, 1});
    const auto agg = aggregate({&a, &b});
    EXPECT_EQ(agg.runs, 2u);
    EXPECT_EQ(agg.mean, (std::vector<double>{2.0, 4.0}));
    EXPECT_EQ(agg.variance, (std::vector<double>{2.0, 8.0}));
    const auto single = aggregate({&a});
    EXPECT_TRUE(single.variance.empty());
}

TEST(Metrics, FirstNonzeroCountsBudgetForSilentRuns) {
    const auto a = record({0, 0, 0, 0}, {0, 0, 2, 0}, 0);
    const auto b = record({0, 0, 0, 0}, {0, 0, 0, 0}, 1);
    const auto c = record({0, 0, 0, 0}, {0, 1, 0, 1}, 2);
    const auto s = summarize({&a, &b, &c}, 4);
    ASSERT_TRUE(s.first_nonzero_reward_episode);
    EXPECT_DOUBLE_EQ(*s.first_nonzero_reward_episode, (2.0 + 4.0 + 1.0) / 3.0);
    EXPECT_EQ(s.first_nonzero_reward_episode_min, 1u);
    EXPECT_EQ(s.total_goal_rewards, 4u);
    const auto silent = summarize({&b}, 4);
    EXPECT_FALSE(silent.first_nonzero_reward_episode);
}

TEST(Metrics, CsvRoundTripIsExact) {
    SuiteResult r;
    r.runs.push_back(record({0.1, 1.0 / 3.0, -1e-300, 12345.678901234567}, {0, 0, 0, 0}));
    const auto parsed = parse_curves_csv(curves_csv(r));
    EXPECT_EQ(parsed.at({"x", "eps_delta_greedy"}).at(0), r.runs[0].returns);
}
