#pragma once

#include "ltlrl/estimator.hpp"
#include "ltlrl/product.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ltlrl {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Tabular action values over product states plus the per-pair update
/// counters n_P(s,a). Rows have a fixed stride (the largest action count).
class QTable {
public:
    QTable() = default;
    QTable(std::size_t num_states, std::size_t stride, double initial = 0.0);

    [[nodiscard]] std::size_t num_states() const { return num_states_; }
    [[nodiscard]] std::size_t stride() const { return stride_; }
    [[nodiscard]] double value(std::size_t s, ActionId a) const { return q_[slot(s, a)]; }
    void set(std::size_t s, ActionId a, double v) { q_[slot(s, a)] = v; }
    [[nodiscard]] std::uint64_t count(std::size_t s, ActionId a) const { return n_[slot(s, a)]; }
    [[nodiscard]] std::uint64_t state_count(std::size_t s) const { return visits_.at(s); }
    /// Restores n_P(s,a) from a checkpoint; the state total follows.
    void set_count(std::size_t s, ActionId a, std::uint64_t n);

    /// n_P += 1, Q += (target - Q) / n_P. Returns |change of Q|.
    double update(std::size_t s, ActionId a, double target);

    /// argmax over the first m actions, lowest index on ties.
    [[nodiscard]] ActionId greedy(std::size_t s, std::size_t m) const;
    [[nodiscard]] double max_value(std::size_t s, std::size_t m) const;
    [[nodiscard]] double max_abs() const;
    [[nodiscard]] const std::vector<double>& values() const { return q_; }

private:
    [[nodiscard]] std::size_t slot(std::size_t s, ActionId a) const {
        return s * stride_ + static_cast<std::size_t>(a);
    }

    std::size_t num_states_ = 0;
    std::size_t stride_ = 0;
    std::vector<double> q_;
    std::vector<std::uint64_t> n_;
    std::vector<std::uint64_t> visits_;
};

nlohmann::json to_json(const QTable& table);
QTable qtable_from_json(const nlohmann::json& j);

enum class PolicyKind { eps_delta_greedy, eps_greedy, boltzmann, ucb1 };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

/// Values in force at one step. epsilon == delta_b + delta_e.
struct ExplorationParams {
    double epsilon = 0.0;
    double delta_b = 0.0;
    double delta_e = 0.0;
    double temperature = 0.0;
    double ucb_c = 0.0;
};

enum class ScheduleClock { step, episode };

/// Geometric schedules with floors, evaluated in closed form at index k:
///   epsilon(k) = max(epsilon_floor, epsilon_start * epsilon_decay^k)
///   delta_e(k) = epsilon(k) * max(random_share_floor, random_share_start * random_share_decay^k)
///   delta_b(k) = epsilon(k) - delta_e(k)
///   T(k)       = max(temperature_floor, temperature_start * temperature_decay^k)
struct ExplorationSchedule {
    double epsilon_start = 0.9;
    double epsilon_decay = 0.99999;
    double epsilon_floor = 0.05;
    double random_share_start = 0.8;
    double random_share_decay = 0.999;
    double random_share_floor = 0.1;
    double temperature_start = 5.0;
    double temperature_decay = 0.9995;
    double temperature_floor = 0.05;
    double ucb_c = 1.0;
    ScheduleClock clock = ScheduleClock::step;
};

void validate(const ExplorationSchedule& schedule);
ExplorationParams decay_params(const ExplorationSchedule& schedule, std::uint64_t k);

nlohmann::json to_json(const ExplorationSchedule& schedule);
ExplorationSchedule schedule_from_json(const nlohmann::json& j, ExplorationSchedule defaults = {});

/// Probabilities of the (epsilon, delta)-greedy policy over m actions. Without
/// a biased action the delta_b mass is spread like delta_e.
std::vector<double> exploration_masses(std::size_t m, ActionId greedy, std::optional<ActionId> biased,
                                       const ExplorationParams& params);

std::vector<double> boltzmann_probabilities(const std::vector<double>& q, double temperature);

enum class CloserSelection { max_prob, uniform };
enum class AvoidRule { keep_self_loops, literal };

struct BiasOptions {
    GraphWeighting weighting = GraphWeighting::unit;
    CloserSelection selection = CloserSelection::max_prob;
    AvoidRule avoid = AvoidRule::keep_self_loops;
    /// At accepting states, steer back into accepting states.
    bool bias_at_accepting = true;
};

struct GoalSets {
    std::vector<AutState> q_goal;
    std::vector<MdpState> x_goal;
    std::vector<char> avoid;                 // indexed by MDP state
    std::vector<ActionId> epsilon_actions;   // offsets into the epsilon moves of q
    [[nodiscard]] bool empty() const { return q_goal.empty(); }
};

struct BiasedChoice {
    ActionId action = 0;
    MdpState target = 0;
};

/// Goal sets and shortest-path fields for biased exploration. Goal sets are
/// cached per (target set, automaton state); cost fields are recomputed when
/// the model's support (unit weights) or values (reciprocal weights) change.
///
/// For Rabin tasks the target set index is always 0; for limit-deterministic
/// tasks it selects the accepting set F_j whose distance table is used.
class BiasContext {
public:
    BiasContext(const ProductSpace& space, const KernelView& model, BiasOptions options = {});

    [[nodiscard]] const BiasOptions& options() const { return options_; }
    const GoalSets& goal_sets(AutState q, std::size_t target_set = 0);
    /// J_{x, X_goal} for every MDP state; +inf when unreachable.
    const std::vector<double>& cost_field(AutState q, std::size_t target_set = 0);
    std::vector<MdpState> closer_set(AutState q, MdpState x_cur, std::size_t target_set = 0);
    std::optional<BiasedChoice> biased_action(AutState q, MdpState x_cur, Rng& rng, std::size_t target_set = 0);
    /// Epsilon moves into Q_goal take precedence over MDP actions.
    std::optional<ActionId> biased_product_action(ProductState s, Rng& rng, std::size_t target_set = 0);

private:
    struct Entry {
        bool ready = false;
        GoalSets sets;
        std::vector<double> cost;
        std::uint64_t version = ~std::uint64_t{0};
    };
    Entry& entry(AutState q, std::size_t target_set);
    void compute_goal_sets(Entry& e, AutState q, std::size_t target_set) const;
    void compute_cost(Entry& e);
    [[nodiscard]] std::uint64_t model_version() const;
    [[nodiscard]] int distance(AutState q, std::size_t target_set) const;
    [[nodiscard]] const Adjacency& pruned() const;
    void refresh_reverse();

    const ProductSpace* space_;
    const KernelView* model_;
    BiasOptions options_;
    std::vector<Entry> entries_;
    std::vector<std::vector<MdpState>> reverse_;
    std::uint64_t reverse_version_ = ~std::uint64_t{0};
};

/// Chooses an action at s. `bias` is only consulted by eps_delta_greedy and
/// may be null for the other kinds.
ActionId select_action(PolicyKind kind, const QTable& table, BiasContext* bias, const ProductSpace& space,
                       ProductState s, const ExplorationParams& params, Rng& rng, std::size_t target_set = 0);

} // namespace ltlrl
