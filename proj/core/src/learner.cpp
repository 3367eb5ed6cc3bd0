#include "ltlrl/learner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ltlrl {

void validate(const RunConfig& c) {
    if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0,1)");
    if (c.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (c.convergence.tolerance < 0.0) throw std::invalid_argument("convergence tolerance must be >= 0");
    validate(c.schedule);
}

Learner::Learner(const ProductSpace& space, RunConfig config)
    : space_(&space),
      config_(std::move(config)),
      q_(space.num_states(), space.max_actions(), config_.q_init),
      model_(space.mdp()),
      bias_(space, model_, config_.bias),
      rng_(config_.seed) {
    validate(config_);
    if (space.rabin()) require_satisfiable(*space.rabin());
    else if (!space.ldba()->satisfiable()) throw UnsatisfiableTask("some accepting set is unreachable");
    if (space.is_ldba()) pending_ = LdbaEpisodeState(space.ldba()->num_sets());
    const auto& r = config_.rewards;
    q_bound_ = std::max({std::abs(r.goal()), std::abs(r.bad()), std::abs(r.neutral()), std::abs(config_.q_init)}) /
               (1.0 - config_.gamma);
}

ExplorationParams Learner::current_params() const {
    const std::uint64_t k = config_.schedule.clock == ScheduleClock::step ? steps_ : episodes_;
    return decay_params(config_.schedule, k);
}

bool Learner::violated(AutState q) const {
    if (space_->rabin()) return space_->rabin()->distance(q) == kUnreachable;
    const auto* l = space_->ldba();
    for (std::size_t j = 0; j < l->num_sets(); ++j)
        if (l->distance(j, q) == kUnreachable) return true;
    return false;
}

void Learner::pick_target_set() {
    const auto open = pending_.pending_sets();
    target_set_ = open[rng_.below(open.size())];
}

EpisodeTrace Learner::run_episode(bool record) {
    EpisodeTrace trace;
    ProductState s = space_->initial();
    if (space_->is_ldba()) {
        pending_.reset();
        pick_target_set();
    }
    if (record) trace.states.push_back(s);
    double discount = 1.0;
    const double gamma = config_.gamma;
    for (std::size_t t = 0; t < config_.horizon; ++t) {
        if (is_deadlock(*space_, s)) {
            trace.deadlock = true;
            break;
        }
        const auto params = current_params();
        const ActionId a = select_action(config_.policy, q_, &bias_, *space_, s, params, rng_, target_set_);
        const auto step = product_step(*space_, s, a, rng_);
        if (!step.epsilon) model_.record(s.x, a, step.next.x);
        const std::size_t before = space_->is_ldba() ? pending_.remaining() : 0;
        const double r = transition_reward(*space_, step, config_.rewards, space_->is_ldba() ? &pending_ : nullptr);
        if (space_->is_ldba() && (pending_.remaining() != before || !pending_.pending(target_set_))) pick_target_set();

        const std::size_t m_next = space_->num_actions(step.next);
        const double target = r + gamma * q_.max_value(space_->index(step.next), m_next);
        trace.max_q_change = std::max(trace.max_q_change, q_.update(space_->index(s), a, target));

        trace.discounted_return += discount * r;
        discount *= gamma;
        if (r > 0.0) ++trace.goal_rewards;
        if (record) {
            trace.actions.push_back(a);
            trace.rewards.push_back(r);
            trace.states.push_back(step.next);
        }
        ++steps_;
        s = step.next;
        if (config_.stop_on_violation && violated(s.q)) break;
    }
    ++episodes_;
    if (q_.max_abs() > q_bound_ * (1.0 + 1e-12))
        throw std::logic_error("Q value left the bound max|r| / (1 - gamma)");
    return trace;
}

RunResult run_training(const ProductSpace& space, const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    Learner learner(space, config);
    RunResult result;
    std::size_t quiet = 0;
    for (std::size_t e = 0; e < config.episodes; ++e) {
        const auto trace = learner.run_episode(false);
        result.returns.push_back(trace.discounted_return);
        result.goal_rewards.push_back(trace.goal_rewards);
        if (config.convergence.enabled) {
            quiet = trace.max_q_change < config.convergence.tolerance ? quiet + 1 : 0;
            if (quiet >= config.convergence.patience) {
                result.converged = true;
                break;
            }
        }
    }
    result.q = learner.q();
    result.model = learner.model();
    result.greedy = extract_greedy(space, result.q);
    result.steps = learner.steps();
    result.episodes = learner.episodes();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<ActionId> extract_greedy(const ProductSpace& space, const QTable& q) {
    std::vector<ActionId> out(space.num_states(), 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto m = space.num_actions(space.state_at(i));
        out[i] = m ? q.greedy(i, m) : 0;
    }
    return out;
}

namespace {

char action_letter(const ProductSpace& space, ProductState s, ActionId a) {
    if (space.is_epsilon_action(s, a)) return 'E';
    if (space.mdp().grid_width() > 0) return "LRUDI"[a];
    return a < 10 ? static_cast<char>('0' + a) : '?';
}

} // namespace

std::vector<std::string> policy_grid(const ProductSpace& space, const std::vector<ActionId>& greedy, AutState q) {
    if (q < 0 || static_cast<std::size_t>(q) >= space.num_automaton_states())
        throw std::out_of_range("automaton state out of range");
    const std::size_t nx = space.num_mdp_states();
    const auto w = static_cast<std::size_t>(space.mdp().grid_width());
    const std::size_t width = w > 0 ? w : nx;
    std::vector<std::string> rows;
    for (std::size_t x = 0; x < nx; ++x) {
        if (x % width == 0) rows.emplace_back();
        const ProductState s{static_cast<MdpState>(x), q};
        rows.back() += action_letter(space, s, greedy.at(space.index(s)));
    }
    return rows;
}

nlohmann::json policy_grid_json(const ProductSpace& space, const std::vector<ActionId>& greedy, AutState q) {
    return {{"q", q},
            {"width", space.mdp().grid_width()},
            {"height", space.mdp().grid_height()},
            {"rows", policy_grid(space, greedy, q)}};
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"policy", to_string(c.policy)},
            {"schedule", to_json(c.schedule)},
            {"bias",
             {{"weighting", c.bias.weighting == GraphWeighting::unit ? "unit" : "reciprocal"},
              {"selection", c.bias.selection == CloserSelection::max_prob ? "max_prob" : "uniform"},
              {"avoid", c.bias.avoid == AvoidRule::keep_self_loops ? "keep_self_loops" : "literal"},
              {"bias_at_accepting", c.bias.bias_at_accepting}}},
            {"rewards", {{"goal", c.rewards.goal()}, {"bad", c.rewards.bad()}, {"neutral", c.rewards.neutral()}}},
            {"gamma", c.gamma},
            {"episodes", c.episodes},
            {"horizon", c.horizon},
            {"seed", c.seed},
            {"q_init", c.q_init},
            {"convergence",
             {{"enabled", c.convergence.enabled},
              {"tolerance", c.convergence.tolerance},
              {"patience", c.convergence.patience}}},
            {"stop_on_violation", c.stop_on_violation}};
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
    auto pick = [](const nlohmann::json& obj, const char* key, const char* a, const char* b, const char* fallback) {
        const std::string v = obj.value(key, std::string(fallback));
        if (v != a && v != b)
            throw std::invalid_argument(std::string(key) + " must be \"" + a + "\" or \"" + b + "\"");
        return v == a;
    };
    if (j.contains("policy")) c.policy = policy_kind_from_string(j.at("policy").get<std::string>());
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"), c.schedule);
    if (j.contains("bias")) {
        const auto& b = j.at("bias");
        const bool unit_default = c.bias.weighting == GraphWeighting::unit;
        c.bias.weighting = pick(b, "weighting", "unit", "reciprocal", unit_default ? "unit" : "reciprocal")
                               ? GraphWeighting::unit
                               : GraphWeighting::reciprocal;
        c.bias.selection = pick(b, "selection", "max_prob", "uniform",
                                c.bias.selection == CloserSelection::max_prob ? "max_prob" : "uniform")
                               ? CloserSelection::max_prob
                               : CloserSelection::uniform;
        c.bias.avoid = pick(b, "avoid", "keep_self_loops", "literal",
                            c.bias.avoid == AvoidRule::keep_self_loops ? "keep_self_loops" : "literal")
                           ? AvoidRule::keep_self_loops
                           : AvoidRule::literal;
        c.bias.bias_at_accepting = b.value("bias_at_accepting", c.bias.bias_at_accepting);
    }
    if (j.contains("rewards")) {
        const auto& r = j.at("rewards");
        c.rewards = RewardParams(r.value("goal", c.rewards.goal()), r.value("bad", c.rewards.bad()),
                                 r.value("neutral", c.rewards.neutral()));
    }
    c.gamma = j.value("gamma", c.gamma);
    c.episodes = j.value("episodes", c.episodes);
    c.horizon = j.value("horizon", c.horizon);
    c.seed = j.value("seed", c.seed);
    c.q_init = j.value("q_init", c.q_init);
    if (j.contains("convergence")) {
        const auto& v = j.at("convergence");
        c.convergence.enabled = v.value("enabled", c.convergence.enabled);
        c.convergence.tolerance = v.value("tolerance", c.convergence.tolerance);
        c.convergence.patience = v.value("patience", c.convergence.patience);
    }
    c.stop_on_violation = j.value("stop_on_violation", c.stop_on_violation);
    validate(c);
    return c;
}

} // namespace ltlrl
