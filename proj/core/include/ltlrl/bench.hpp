#pragma once

#include "ltlrl/config.hpp"
#include "ltlrl/learner.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ltlrl {

struct BenchExperiment {
    ExperimentConfig base;
    std::vector<PolicyKind> policies;
    /// Per-policy run overrides, e.g. the UCB1 constant.
    std::map<PolicyKind, nlohmann::json> overrides;
};

/// Suite file:
///   {"seeds": [0, 1, 2, 3, 4],
///    "policies": ["eps_delta_greedy", "eps_greedy", "boltzmann", "ucb1"],
///    "workers": 0,
///    "run": {shared RunConfig fields},
///    "experiments": [{experiment fields, optional "policies",
///                     optional "policy_overrides": {"ucb1": {...}}}, ...],
///    "preset": "reference"}
/// A preset supplies the experiment list; explicit fields override it.
struct BenchmarkSuite {
    std::string name = "suite";
    std::vector<BenchExperiment> experiments;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t workers = 0;  // 0: hardware concurrency
    bool long_running = false;
};

BenchmarkSuite suite_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Presets: "reference" (four tasks, 1000 episodes), "reach_avoid_1_long" (Reach-Avoid I,
/// 5000 episodes), "reach_avoid_2_long" (Reach-Avoid II, 100000 episodes). The last two are
/// long-running.
BenchmarkSuite preset_suite(const std::string& name);

/// The run configuration of one cell of the suite.
RunConfig cell_config(const BenchExperiment& experiment, PolicyKind policy, std::uint64_t seed);

struct RunRecord {
    std::string experiment;
    PolicyKind policy = PolicyKind::eps_delta_greedy;
    std::uint64_t seed = 0;
    std::vector<double> returns;
    std::vector<std::size_t> goal_rewards;
    std::vector<std::string> policy_grid;  // every automaton slice, first seed only
    nlohmann::json policy_grid_json;
    std::optional<std::string> error;
    double wall_seconds = 0.0;
};

struct CurveAggregate {
    std::string experiment;
    PolicyKind policy = PolicyKind::eps_delta_greedy;
    std::vector<double> mean;
    std::vector<double> variance;  // sample variance, empty with fewer than 2 runs
    std::size_t runs = 0;
};

/// Mean and sample variance per episode over the runs that completed.
CurveAggregate aggregate(const std::vector<const RunRecord*>& runs);

struct PolicySummary {
    double final_mean = 0.0;
    double final_variance = 0.0;
    double auc = 0.0;  // mean over episodes of the mean curve
    /// Mean over runs of the first episode with a positive reward; runs that
    /// never collect one count as the episode budget. Empty when no run
    /// collected anything.
    std::optional<double> first_nonzero_reward_episode;
    /// First episode at which the mean positive-reward count is nonzero, i.e.
    /// the earliest run.
    std::optional<std::size_t> first_nonzero_reward_episode_min;
    std::vector<std::optional<std::size_t>> first_nonzero_per_run;
    std::uint64_t total_goal_rewards = 0;
    std::size_t runs = 0;
    std::vector<std::string> errors;
};

PolicySummary summarize(const std::vector<const RunRecord*>& runs, std::size_t episodes);

struct SuiteResult {
    std::vector<RunRecord> runs;  // ordered experiment, policy, seed
    double wall_seconds = 0.0;
};

/// Executes every (experiment, policy, seed) cell on a bounded worker pool.
/// A failing cell records its error; the rest of the suite continues.
SuiteResult run_suite(const BenchmarkSuite& suite);

/// Writes curves.csv, goal_rewards.csv, aggregate.csv, summary.json and the
/// policy grids into `dir`. Returns the summary document.
nlohmann::json write_suite_outputs(const BenchmarkSuite& suite, const SuiteResult& result,
                                   const std::filesystem::path& dir);

nlohmann::json suite_summary(const BenchmarkSuite& suite, const SuiteResult& result);

/// "experiment,policy,seed,episode,discounted_return" rows, %.17g.
std::string curves_csv(const SuiteResult& result);

/// Parsed curves.csv rows grouped by (experiment, policy), seeds in file
/// order; used to check the summary against the raw curves.
std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> parse_curves_csv(
    const std::string& text);

} // namespace ltlrl
