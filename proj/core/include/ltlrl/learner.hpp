#pragma once

#include "ltlrl/estimator.hpp"
#include "ltlrl/policy.hpp"
#include "ltlrl/product.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ltlrl {

struct ConvergenceCriterion {
    bool enabled = true;
    double tolerance = 1e-4;    // on max |change of Q| within an episode
    std::size_t patience = 50;  // consecutive quiet episodes
};

struct RunConfig {
    PolicyKind policy = PolicyKind::eps_delta_greedy;
    ExplorationSchedule schedule;
    BiasOptions bias;
    RewardParams rewards;
    double gamma = 0.99;
    std::size_t episodes = 1000;
    std::size_t horizon = 500;
    std::uint64_t seed = 0;
    double q_init = 0.0;
    ConvergenceCriterion convergence;
    /// End an episode once no accepting state is reachable any more.
    bool stop_on_violation = false;
};

void validate(const RunConfig& config);

struct EpisodeTrace {
    std::vector<ProductState> states;  // s_0 .. s_T
    std::vector<ActionId> actions;
    std::vector<double> rewards;
    double discounted_return = 0.0;
    std::size_t goal_rewards = 0;      // number of positive rewards
    double max_q_change = 0.0;
    bool deadlock = false;
};

struct RunResult {
    std::vector<double> returns;            // one per episode
    std::vector<std::size_t> goal_rewards;  // positive rewards per episode
    QTable q;
    EstimatedModel model;
    std::vector<ActionId> greedy;           // per product state index
    std::uint64_t steps = 0;
    std::size_t episodes = 0;
    bool converged = false;
    double wall_seconds = 0.0;
};

/// Algorithm state of one training run. Not copyable: the bias context
/// points into the owned estimator.
class Learner {
public:
    Learner(const ProductSpace& space, RunConfig config);
    Learner(const Learner&) = delete;
    Learner& operator=(const Learner&) = delete;

    /// One episode from s_0 of at most `horizon` steps. States and actions are
    /// recorded when `record` is set.
    EpisodeTrace run_episode(bool record = false);

    [[nodiscard]] const QTable& q() const { return q_; }
    [[nodiscard]] QTable& q() { return q_; }
    [[nodiscard]] const EstimatedModel& model() const { return model_; }
    [[nodiscard]] std::uint64_t steps() const { return steps_; }
    [[nodiscard]] std::size_t episodes() const { return episodes_; }
    [[nodiscard]] const RunConfig& config() const { return config_; }
    [[nodiscard]] ExplorationParams current_params() const;

private:
    [[nodiscard]] bool violated(AutState q) const;
    void pick_target_set();

    const ProductSpace* space_;
    RunConfig config_;
    QTable q_;
    EstimatedModel model_;
    BiasContext bias_;
    Rng rng_;
    LdbaEpisodeState pending_;
    std::size_t target_set_ = 0;
    std::uint64_t steps_ = 0;
    std::size_t episodes_ = 0;
    double q_bound_ = 0.0;
};

/// Runs episodes until the cap or convergence.
RunResult run_training(const ProductSpace& space, const RunConfig& config);

/// argmax_a Q(s, a) per product state, lowest index on ties.
std::vector<ActionId> extract_greedy(const ProductSpace& space, const QTable& q);

/// One letter per MDP state for automaton state q: L R U D I for grid
/// actions, E for epsilon moves, digits otherwise. Grid MDPs render one line
/// per grid row.
std::vector<std::string> policy_grid(const ProductSpace& space, const std::vector<ActionId>& greedy, AutState q);
nlohmann::json policy_grid_json(const ProductSpace& space, const std::vector<ActionId>& greedy, AutState q);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig defaults = {});

} // namespace ltlrl
