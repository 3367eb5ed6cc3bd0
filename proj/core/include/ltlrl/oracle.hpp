#pragma once

#include "ltlrl/automaton.hpp"
#include "ltlrl/mdp.hpp"
#include "ltlrl/policy.hpp"
#include "ltlrl/product.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltlrl {

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PmdpEntry {
    std::size_t target = 0;
    double prob = 0.0;
};

/// A run is accepted by a clause when it visits every `inf` set infinitely
/// often and `fin` only finitely often. Rabin pairs give one clause each
/// ({G_i}, B_i); a generalized Büchi condition gives one clause with all F_j.
struct AcceptanceClause {
    std::vector<std::vector<char>> inf;
    std::vector<char> fin;
};

/// Per state, per action: the successor distribution.
using PmdpRows = std::vector<std::vector<std::vector<PmdpEntry>>>;

/// Enumerated product MDP. State indices agree with ProductSpace::index, and
/// action slots with the product's action numbering.
class ExplicitPmdp {
public:
    ExplicitPmdp() = default;
    /// Validates targets and row sums (1e-9). `epsilon_rows` marks rows that
    /// are automaton epsilon moves (same shape as `rows`, may be empty).
    ExplicitPmdp(std::size_t initial, const PmdpRows& rows, std::vector<AcceptanceClause> acceptance,
                 std::vector<std::vector<char>> epsilon_rows = {});

    [[nodiscard]] std::size_t num_states() const { return row_begin_.size() - 1; }
    [[nodiscard]] std::size_t initial() const { return initial_; }
    [[nodiscard]] std::size_t num_actions(std::size_t s) const { return row_begin_[s + 1] - row_begin_[s]; }
    [[nodiscard]] std::size_t num_rows() const { return entry_begin_.size() - 1; }
    [[nodiscard]] std::size_t row_id(std::size_t s, ActionId a) const { return row_begin_[s] + static_cast<std::size_t>(a); }
    [[nodiscard]] std::span<const PmdpEntry> row(std::size_t s, ActionId a) const;
    [[nodiscard]] bool is_epsilon(std::size_t s, ActionId a) const { return epsilon_[row_id(s, a)] != 0; }
    [[nodiscard]] const std::vector<AcceptanceClause>& acceptance() const { return acceptance_; }
    [[nodiscard]] std::size_t num_entries() const { return entries_.size(); }
    /// Index of the first entry of row (s, a) in the flat entry order.
    [[nodiscard]] std::size_t entry_offset(std::size_t s, ActionId a) const { return entry_begin_[row_id(s, a)]; }

private:
    std::size_t initial_ = 0;
    std::vector<std::size_t> row_begin_{0};
    std::vector<std::size_t> entry_begin_{0};
    std::vector<PmdpEntry> entries_;
    std::vector<char> epsilon_;
    std::vector<AcceptanceClause> acceptance_;
};

inline constexpr std::size_t kDefaultStateCap = 100000;

/// Enumerates every (x, q) of the product, including unreachable ones.
ExplicitPmdp materialize(const ProductSpace& space, std::size_t state_cap = kDefaultStateCap);

struct EndComponent {
    std::vector<std::size_t> states;             // sorted
    std::vector<std::vector<ActionId>> actions;  // parallel to states
    std::size_t clause = 0;                      // acceptance clause it satisfies
};

/// Maximal end components of the sub-MDP on the states with `allowed` set
/// (all states when empty). Components are pairwise disjoint and closed under
/// their actions.
std::vector<EndComponent> maximal_end_components(const ExplicitPmdp& pmdp, const std::vector<char>& allowed = {});

/// For each clause, the maximal end components avoiding `fin` that meet every
/// `inf` set.
std::vector<EndComponent> accepting_mecs(const ExplicitPmdp& pmdp);

/// Row-stochastic action distribution per state.
using StochasticPolicy = std::vector<std::vector<double>>;

StochasticPolicy deterministic_policy(const ExplicitPmdp& pmdp, const std::vector<ActionId>& actions);

inline constexpr double kOracleTolerance = 1e-10;

/// Probability of eventually reaching `target`, maximized over policies, or
/// under `policy` when given. Value iteration from below until the sup-norm
/// change drops under `tolerance`.
std::vector<double> reach_probability(const ExplicitPmdp& pmdp, const std::vector<char>& target,
                                      const StochasticPolicy* policy = nullptr, double tolerance = kOracleTolerance);

/// Optimal probability of satisfying the acceptance condition from each state:
/// maximal reachability of the union of accepting end components.
std::vector<double> max_sat_probability(const ExplicitPmdp& pmdp, double tolerance = kOracleTolerance);

/// Satisfaction probability of a fixed stationary policy: reachability of the
/// accepting bottom components of the induced chain.
std::vector<double> policy_sat_probability(const ExplicitPmdp& pmdp, const StochasticPolicy& policy,
                                           double tolerance = kOracleTolerance);

/// Reward of every entry of the flat entry order, following the Rabin reward
/// (epsilon rows pay r_0). Throws for limit-deterministic products, whose
/// reward is not a function of the transition alone.
std::vector<double> transition_rewards(const ExplicitPmdp& pmdp, const ProductSpace& space, const RewardParams& params);

/// U with U = R_mu + gamma P_mu U, iterated until the remaining error is below
/// `tolerance` (sup-norm change <= tolerance (1 - gamma) / gamma).
std::vector<double> evaluate_policy(const ExplicitPmdp& pmdp, const StochasticPolicy& policy,
                                    const std::vector<double>& rewards, double gamma,
                                    double tolerance = kOracleTolerance);

/// Q(s,a) = sum_t P(s,a,t) (R + gamma U(t)), laid out with the given stride.
QTable action_values(const ExplicitPmdp& pmdp, const std::vector<double>& rewards, const std::vector<double>& values,
                     double gamma, std::size_t stride);

/// Q* by value iteration to the same error bound.
QTable optimal_action_values(const ExplicitPmdp& pmdp, const std::vector<double>& rewards, double gamma,
                             std::size_t stride, double tolerance = kOracleTolerance);

/// The (epsilon, delta)-greedy distribution at every state for a fixed greedy
/// choice per state and an optional biased action per state.
StochasticPolicy exploration_policy(const ExplicitPmdp& pmdp, const std::vector<ActionId>& greedy,
                                    const std::vector<std::optional<ActionId>>& biased,
                                    const ExplorationParams& params);

/// a_b per product state computed against the true kernel (max-prob
/// selection, so no randomness is involved).
std::vector<std::optional<ActionId>> true_biased_actions(const ProductSpace& space, BiasOptions options = {});

struct ImprovementOptions {
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    double tolerance = 1e-9;
    bool zero_bias = false;  // delta_b = 0 in every trial
    double gamma = 0.99;
    RewardParams rewards;
};

struct ImprovementViolation {
    std::size_t trial = 0;
    std::size_t state = 0;
    double deficit = 0.0;  // U_mu(s) - U_mu'(s)
};

struct ImprovementReport {
    std::size_t trials = 0;
    std::vector<ImprovementViolation> violations;
    double worst_deficit = 0.0;
    [[nodiscard]] bool passed() const { return violations.empty(); }
};

/// Random Q tables and (epsilon, delta_b, delta_e): mu is (epsilon, delta)-
/// greedy in Q, mu' is (epsilon, delta)-greedy in Q^mu with the same biased
/// actions; checks U^mu' >= U^mu - tolerance everywhere.
ImprovementReport verify_policy_improvement(const ProductSpace& space, const ExplicitPmdp& pmdp,
                                            const ImprovementOptions& options = {});

enum class BiasTheorem { goal_set, single_target };

/// A start state, a fixed greedy action per product state and exploration
/// parameters on which the biased and the unbiased policy are compared.
struct BiasInstance {
    std::string name;
    BiasTheorem theorem = BiasTheorem::goal_set;
    LabeledMdp mdp;
    RabinAutomaton automaton;
    ProductState start;
    std::vector<ActionId> greedy;  // per MDP state, used at every q
    ExplorationParams params;
};

/// Corridor of `cells` cells with exits at both ends labeled 1 and 2.
/// Actions: 0 = left, 1 = right; the intended neighbor with `p_move`, the
/// opposite one and staying with half the rest each. Exits are absorbing.
/// goal_set: both exits lead to one accepting state; single_target: each exit
/// has its own accepting state. The greedy action points away from the
/// nearer exit.
BiasInstance hallway_instance(BiasTheorem theorem, int cells = 7, int start_cell = 2, double p_move = 0.8,
                              ExplorationParams params = {0.5, 0.3, 0.2, 0.0, 0.0});

class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProportionEstimate {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline constexpr double kZ99 = 2.5758293035489004;

/// Wilson score interval.
ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials, double z = kZ99);

struct BiasComparison {
    double exact_biased = 0.0;
    double exact_unbiased = 0.0;
    ProportionEstimate mc_biased;
    ProportionEstimate mc_unbiased;
};

struct BiasTheoremReport {
    std::string instance;
    BiasTheorem theorem = BiasTheorem::goal_set;
    int k_star = 0;
    std::vector<AutState> q_goal;
    AutState target_q = -1;  // single_target: the q_b compared
    BiasComparison biased;   // delta_b as configured
    BiasComparison control;  // delta_b = 0, same epsilon
    bool exact_separated = false;
    bool intervals_separated = false;
    bool control_equal = false;
    bool control_overlap = false;
    [[nodiscard]] bool passed() const {
        return exact_separated && intervals_separated && control_equal && control_overlap;
    }
};

/// Runs the comparison after checking the theorem's hypothesis along every
/// state the closer-set recursion can visit within k* steps. Throws
/// HypothesisError when the instance does not satisfy it.
BiasTheoremReport verify_bias_theorem(const BiasInstance& instance, std::size_t trials, std::uint64_t seed = 0);

nlohmann::json to_json(const ImprovementReport& report);
nlohmann::json to_json(const ProportionEstimate& estimate);
nlohmann::json to_json(const BiasTheoremReport& report);

/// Random deterministic Rabin automaton with 1..max_states states over
/// 1..max_aps propositions. Every feasible symbol gets its own edge; extra
/// edges with infeasible guards exercise pruning.
RabinAutomaton random_rabin_automaton(Rng& rng, std::size_t max_states = 12, std::size_t max_aps = 3);

/// Hop counts between all state pairs by Floyd-Warshall over the moves that
/// stepping each feasible symbol produces; kUnreachable when disconnected.
std::vector<std::vector<int>> all_pairs_hops(const RabinAutomaton& automaton);

struct DistanceCheck {
    std::vector<int> table;        // the automaton's d_F
    std::vector<int> brute_force;  // min over G states of all_pairs_hops
    [[nodiscard]] bool matches() const { return table == brute_force; }
};

DistanceCheck verify_distance_table(const RabinAutomaton& automaton);
nlohmann::json to_json(const DistanceCheck& check);

} // namespace ltlrl
