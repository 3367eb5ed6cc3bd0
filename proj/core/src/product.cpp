#include "ltlrl/product.hpp"

#include <algorithm>

namespace ltlrl {

RewardParams::RewardParams(double r_goal, double r_bad, double r_neutral)
    : r_goal_(r_goal), r_bad_(r_bad), r_neutral_(r_neutral) {
    if (!(r_bad < r_neutral && r_neutral <= 0.0 && 0.0 < r_goal))
        throw std::invalid_argument("rewards must satisfy r_B < r_0 <= 0 < r_G");
}

std::vector<std::size_t> LdbaEpisodeState::pending_sets() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < pending_.size(); ++j)
        if (pending_[j]) out.push_back(j);
    return out;
}

void LdbaEpisodeState::reset() {
    std::fill(pending_.begin(), pending_.end(), 1);
    remaining_ = pending_.size();
}

bool LdbaEpisodeState::visit(std::size_t j) {
    if (!pending_.at(j)) return false;
    pending_[j] = 0;
    if (--remaining_ == 0) reset();
    return true;
}

ProductSpace::ProductSpace(const LabeledMdp& mdp, const RabinAutomaton& automaton)
    : mdp_(&mdp), rabin_(&automaton), nq_(automaton.size()), initial_q_(automaton.initial()), eps_(nq_) {
    tabulate();
}

ProductSpace::ProductSpace(const LabeledMdp& mdp, const LimitDetBuchi& automaton)
    : mdp_(&mdp), ldba_(&automaton), nq_(automaton.size()), initial_q_(automaton.initial()), eps_(nq_) {
    if (!automaton.epsilon_only_nondeterminism())
        throw AutomatonError("limit-deterministic automaton must be deterministic apart from epsilon edges");
    for (std::size_t q = 0; q < nq_; ++q)
        if (!automaton.in_deterministic_part(static_cast<AutState>(q)))
            eps_[q] = automaton.structure().epsilon(static_cast<AutState>(q));
    tabulate();
}

void ProductSpace::tabulate() {
    const std::size_t nx = mdp_->size();
    next_q_.resize(nq_ * nx);
    for (std::size_t q = 0; q < nq_; ++q)
        for (std::size_t x = 0; x < nx; ++x) {
            const auto& label = mdp_->label(static_cast<MdpState>(x));
            const auto qs = static_cast<AutState>(q);
            next_q_[q * nx + x] = rabin_ ? rabin_->step(qs, label) : ldba_->unique_successor(qs, label);
        }
    std::size_t max_eps = 0;
    for (const auto& e : eps_) max_eps = std::max(max_eps, e.size());
    max_actions_ = mdp_->max_actions() + max_eps;
}

std::size_t ProductSpace::num_actions(ProductState s) const {
    return mdp_->num_actions(s.x) + eps_.at(s.q).size();
}

bool ProductSpace::is_epsilon_action(ProductState s, ActionId a) const {
    return a >= 0 && static_cast<std::size_t>(a) >= mdp_->num_actions(s.x);
}

AutState ProductSpace::epsilon_target(ProductState s, ActionId a) const {
    return eps_.at(s.q).at(static_cast<std::size_t>(a) - mdp_->num_actions(s.x));
}

StepResult product_step(const ProductSpace& space, ProductState s, ActionId a, Rng& rng) {
    if (a < 0 || static_cast<std::size_t>(a) >= space.num_actions(s))
        throw std::invalid_argument("action " + std::to_string(a) + " not available at product state (" +
                                    std::to_string(s.x) + "," + std::to_string(s.q) + ")");
    const auto& label = space.mdp().label(s.x);
    if (space.is_epsilon_action(s, a)) return {{s.x, space.epsilon_target(s, a)}, label, true};
    const MdpState x2 = sample_step(space.mdp(), s.x, a, rng);
    return {{x2, space.next_q(s.q, s.x)}, label, false};
}

double rabin_reward(ProductState next, const RabinAutomaton& automaton, const RewardParams& params) {
    if (automaton.in_good(next.q)) return params.goal();
    if (automaton.in_bad(next.q)) return params.bad();
    return params.neutral();
}

double ldba_reward(const std::vector<std::size_t>& hits, LdbaEpisodeState& episode, double r) {
    // consume every pending hit before visit() can refill the set
    std::vector<std::size_t> fresh;
    for (std::size_t j : hits)
        if (episode.pending(j)) fresh.push_back(j);
    for (std::size_t j : fresh) episode.visit(j);
    return fresh.empty() ? 0.0 : r;
}

double ldba_reward(std::optional<std::size_t> hit, LdbaEpisodeState& episode, double r) {
    if (!hit) return 0.0;
    return ldba_reward(std::vector<std::size_t>{*hit}, episode, r);
}

double transition_reward(const ProductSpace& space, const StepResult& step, const RewardParams& params,
                         LdbaEpisodeState* episode) {
    if (step.epsilon) return params.neutral();
    if (space.rabin()) return rabin_reward(step.next, *space.rabin(), params);
    if (!episode) throw std::invalid_argument("limit-deterministic reward needs the episode's pending sets");
    const double r = ldba_reward(space.ldba()->sets_containing(step.next.q), *episode, params.goal());
    return r > 0.0 ? r : params.neutral();
}

bool is_deadlock(const ProductSpace& space, ProductState s) { return space.num_actions(s) == 0; }

} // namespace ltlrl
