#pragma once

#include "ltlrl/automaton.hpp"
#include "ltlrl/mdp.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace ltlrl {

struct ProductState {
    MdpState x = 0;
    AutState q = 0;
    friend bool operator==(const ProductState&, const ProductState&) = default;
};

/// r_G > 0, r_B < r_0 <= 0.
class RewardParams {
public:
    RewardParams() = default;
    RewardParams(double r_goal, double r_bad, double r_neutral);

    [[nodiscard]] double goal() const { return r_goal_; }
    [[nodiscard]] double bad() const { return r_bad_; }
    [[nodiscard]] double neutral() const { return r_neutral_; }

private:
    double r_goal_ = 1.0;
    double r_bad_ = -1e-4;
    double r_neutral_ = 0.0;
};

/// Accepting-set indices not yet visited in the current cycle.
class LdbaEpisodeState {
public:
    LdbaEpisodeState() = default;
    explicit LdbaEpisodeState(std::size_t num_sets) : pending_(num_sets, 1), remaining_(num_sets) {}

    [[nodiscard]] bool pending(std::size_t j) const { return pending_.at(j) != 0; }
    [[nodiscard]] std::size_t remaining() const { return remaining_; }
    [[nodiscard]] std::size_t num_sets() const { return pending_.size(); }
    [[nodiscard]] std::vector<std::size_t> pending_sets() const;
    void reset();
    /// Removes j; refills when that empties the set. Returns whether j was pending.
    bool visit(std::size_t j);

private:
    std::vector<char> pending_;
    std::size_t remaining_ = 0;
};

/// The product MDP, built on the fly. Product action slots at (x, q) are the
/// MDP actions of x followed, for limit-deterministic tasks with q in the
/// nondeterministic part, by one epsilon-move per epsilon edge of q.
///
/// Holds references: the MDP and automaton must outlive the space.
class ProductSpace {
public:
    ProductSpace(const LabeledMdp& mdp, const RabinAutomaton& automaton);
    /// Requires guard-deterministic LDBAs (nondeterminism only via epsilon).
    ProductSpace(const LabeledMdp& mdp, const LimitDetBuchi& automaton);

    [[nodiscard]] const LabeledMdp& mdp() const { return *mdp_; }
    [[nodiscard]] const RabinAutomaton* rabin() const { return rabin_; }
    [[nodiscard]] const LimitDetBuchi* ldba() const { return ldba_; }
    [[nodiscard]] bool is_ldba() const { return ldba_ != nullptr; }

    [[nodiscard]] std::size_t num_mdp_states() const { return mdp_->size(); }
    [[nodiscard]] std::size_t num_automaton_states() const { return nq_; }
    [[nodiscard]] std::size_t num_states() const { return mdp_->size() * nq_; }
    /// Largest action count over all product states.
    [[nodiscard]] std::size_t max_actions() const { return max_actions_; }
    [[nodiscard]] std::size_t index(ProductState s) const {
        return static_cast<std::size_t>(s.x) * nq_ + static_cast<std::size_t>(s.q);
    }
    [[nodiscard]] ProductState state_at(std::size_t index) const {
        return {static_cast<MdpState>(index / nq_), static_cast<AutState>(index % nq_)};
    }

    [[nodiscard]] ProductState initial() const { return {mdp_->initial(), initial_q_}; }
    [[nodiscard]] std::size_t num_actions(ProductState s) const;
    [[nodiscard]] bool is_epsilon_action(ProductState s, ActionId a) const;
    /// Target of epsilon-move `a` at s (a must be an epsilon action).
    [[nodiscard]] AutState epsilon_target(ProductState s, ActionId a) const;
    /// The epsilon edges of q that are exposed as actions (empty for Rabin).
    [[nodiscard]] const std::vector<AutState>& epsilon_moves(AutState q) const { return eps_.at(q); }

    /// delta(q, L(x)), tabulated.
    [[nodiscard]] AutState next_q(AutState q, MdpState x) const {
        return next_q_[static_cast<std::size_t>(q) * mdp_->size() + static_cast<std::size_t>(x)];
    }

private:
    void tabulate();

    const LabeledMdp* mdp_;
    const RabinAutomaton* rabin_ = nullptr;
    const LimitDetBuchi* ldba_ = nullptr;
    std::size_t nq_ = 0;
    AutState initial_q_ = 0;
    std::size_t max_actions_ = 0;
    std::vector<AutState> next_q_;
    std::vector<std::vector<AutState>> eps_;
};

struct StepResult {
    ProductState next;
    Symbol label;        // L(x) of the state being left
    bool epsilon = false;
};

/// x' ~ P(x,a,.), q' = delta(q, L(x)); epsilon moves keep x and jump q.
StepResult product_step(const ProductSpace& space, ProductState s, ActionId a, Rng& rng);

/// r_G if q' lies in some G_i, else r_B if in some B_i, else r_0.
double rabin_reward(ProductState next, const RabinAutomaton& automaton, const RewardParams& params);

/// r when a hit set is still pending this cycle (all pending hits are
/// consumed), 0 otherwise.
double ldba_reward(const std::vector<std::size_t>& hits, LdbaEpisodeState& episode, double r);
double ldba_reward(std::optional<std::size_t> hit, LdbaEpisodeState& episode, double r);

/// Reward of one product transition for either automaton kind. Epsilon moves
/// pay r_0.
double transition_reward(const ProductSpace& space, const StepResult& step, const RewardParams& params,
                         LdbaEpisodeState* episode);

bool is_deadlock(const ProductSpace& space, ProductState s);

} // namespace ltlrl
