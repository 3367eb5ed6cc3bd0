#include "ltlrl/oracle.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ltlrl {

ExplicitPmdp::ExplicitPmdp(std::size_t initial, const PmdpRows& rows, std::vector<AcceptanceClause> acceptance,
                           std::vector<std::vector<char>> epsilon_rows)
    : initial_(initial), acceptance_(std::move(acceptance)) {
    const std::size_t n = rows.size();
    if (n == 0) throw OracleError("product MDP has no states");
    if (initial >= n) throw OracleError("initial state out of range");
    if (!epsilon_rows.empty() && epsilon_rows.size() != n) throw OracleError("epsilon flags do not match the rows");
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < rows[s].size(); ++a) {
            double sum = 0.0;
            for (const auto& e : rows[s][a]) {
                if (e.target >= n) throw OracleError("transition target out of range");
                if (!(e.prob >= 0.0 && e.prob <= 1.0)) throw OracleError("transition probability outside [0,1]");
                sum += e.prob;
                entries_.push_back(e);
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw OracleError("row (" + std::to_string(s) + "," + std::to_string(a) + ") sums to " +
                                  std::to_string(sum));
            entry_begin_.push_back(entries_.size());
            epsilon_.push_back(epsilon_rows.empty() ? 0 : epsilon_rows[s].at(a));
        }
        row_begin_.push_back(entry_begin_.size() - 1);
    }
    for (const auto& c : acceptance_) {
        if (!c.fin.empty() && c.fin.size() != n) throw OracleError("acceptance mask size mismatch");
        for (const auto& m : c.inf)
            if (m.size() != n) throw OracleError("acceptance mask size mismatch");
    }
}

std::span<const PmdpEntry> ExplicitPmdp::row(std::size_t s, ActionId a) const {
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions(s)) throw std::out_of_range("action out of range");
    const std::size_t r = row_id(s, a);
    return {entries_.data() + entry_begin_[r], entry_begin_[r + 1] - entry_begin_[r]};
}

ExplicitPmdp materialize(const ProductSpace& space, std::size_t state_cap) {
    const std::size_t n = space.num_states();
    if (n > state_cap)
        throw OracleError("product has " + std::to_string(n) + " states, above the cap of " +
                          std::to_string(state_cap));
    const auto& mdp = space.mdp();
    PmdpRows rows(n);
    std::vector<std::vector<char>> eps(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ProductState s = space.state_at(i);
        const std::size_t m = space.num_actions(s);
        rows[i].resize(m);
        eps[i].assign(m, 0);
        for (std::size_t a = 0; a < m; ++a) {
            const auto act = static_cast<ActionId>(a);
            if (space.is_epsilon_action(s, act)) {
                rows[i][a].push_back({space.index({s.x, space.epsilon_target(s, act)}), 1.0});
                eps[i][a] = 1;
                continue;
            }
            const AutState q2 = space.next_q(s.q, s.x);
            for (const auto& t : mdp.row(s.x, act)) rows[i][a].push_back({space.index({t.target, q2}), t.prob});
        }
    }
    std::vector<AcceptanceClause> acc;
    auto mask = [&](auto&& member) {
        std::vector<char> m(n, 0);
        for (std::size_t i = 0; i < n; ++i) m[i] = member(space.state_at(i).q) ? 1 : 0;
        return m;
    };
    if (const auto* r = space.rabin()) {
        for (std::size_t p = 0; p < r->pairs().size(); ++p) {
            AcceptanceClause c;
            c.inf.push_back(mask([&](AutState q) { return r->in_good(p, q); }));
            c.fin = mask([&](AutState q) { return r->in_bad(p, q); });
            acc.push_back(std::move(c));
        }
    } else {
        const auto* l = space.ldba();
        AcceptanceClause c;
        for (std::size_t j = 0; j < l->num_sets(); ++j) c.inf.push_back(mask([&](AutState q) { return l->in_set(j, q); }));
        acc.push_back(std::move(c));
    }
    return ExplicitPmdp(space.index(space.initial()), rows, std::move(acc), std::move(eps));
}

namespace {

/// Tarjan's algorithm, iterative. Edges are produced by `for_each_succ(v, f)`;
/// vertices with active[v] == 0 are skipped. Returns the component id per
/// vertex (npos for inactive ones) and the component count.
template <class Succ>
std::pair<std::vector<std::size_t>, std::size_t> strongly_connected(std::size_t n, const std::vector<char>& active,
                                                                   Succ&& for_each_succ) {
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, npos), low(n, 0), comp(n, npos);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::size_t counter = 0, count = 0;
    struct Frame {
        std::size_t v;
        std::vector<std::size_t> succ;
        std::size_t next = 0;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (!active[root] || index[root] != npos) continue;
        std::vector<Frame> frames;
        auto open = [&](std::size_t v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack[v] = 1;
            Frame f{v, {}, 0};
            for_each_succ(v, [&](std::size_t w) {
                if (active[w]) f.succ.push_back(w);
            });
            frames.push_back(std::move(f));
        };
        open(root);
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.next < f.succ.size()) {
                const std::size_t w = f.succ[f.next++];
                if (index[w] == npos) open(w);
                else if (on_stack[w]) low[f.v] = std::min(low[f.v], index[w]);
                continue;
            }
            const std::size_t v = f.v;
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        }
    }
    return {std::move(comp), count};
}

} // namespace

std::vector<EndComponent> maximal_end_components(const ExplicitPmdp& pmdp, const std::vector<char>& allowed) {
    const std::size_t n = pmdp.num_states();
    std::vector<char> alive = allowed.empty() ? std::vector<char>(n, 1) : allowed;
    if (alive.size() != n) throw OracleError("state mask size mismatch");
    std::vector<std::vector<char>> enabled(n);
    for (std::size_t s = 0; s < n; ++s) enabled[s].assign(pmdp.num_actions(s), alive[s]);

    std::vector<std::size_t> comp;
    for (bool changed = true; changed;) {
        changed = false;
        auto succ = [&](std::size_t s, auto&& f) {
            for (std::size_t a = 0; a < enabled[s].size(); ++a)
                if (enabled[s][a])
                    for (const auto& e : pmdp.row(s, static_cast<ActionId>(a)))
                        if (e.prob > 0.0) f(e.target);
        };
        comp = strongly_connected(n, alive, succ).first;
        for (std::size_t s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            bool any = false;
            for (std::size_t a = 0; a < enabled[s].size(); ++a) {
                if (!enabled[s][a]) continue;
                for (const auto& e : pmdp.row(s, static_cast<ActionId>(a))) {
                    if (e.prob > 0.0 && (!alive[e.target] || comp[e.target] != comp[s])) {
                        enabled[s][a] = 0;
                        changed = true;
                        break;
                    }
                }
                any = any || enabled[s][a];
            }
            if (!any) {
                alive[s] = 0;
                changed = true;
            }
        }
    }
    std::vector<EndComponent> out;
    std::vector<std::size_t> slot(n, static_cast<std::size_t>(-1));
    for (std::size_t s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        if (slot[comp[s]] == static_cast<std::size_t>(-1)) {
            slot[comp[s]] = out.size();
            out.emplace_back();
        }
        auto& c = out[slot[comp[s]]];
        c.states.push_back(s);
        c.actions.emplace_back();
        for (std::size_t a = 0; a < enabled[s].size(); ++a)
            if (enabled[s][a]) c.actions.back().push_back(static_cast<ActionId>(a));
    }
    return out;
}

std::vector<EndComponent> accepting_mecs(const ExplicitPmdp& pmdp) {
    std::vector<EndComponent> out;
    const std::size_t n = pmdp.num_states();
    for (std::size_t k = 0; k < pmdp.acceptance().size(); ++k) {
        const auto& clause = pmdp.acceptance()[k];
        std::vector<char> allowed(n, 1);
        if (!clause.fin.empty())
            for (std::size_t s = 0; s < n; ++s) allowed[s] = clause.fin[s] ? 0 : 1;
        for (auto& c : maximal_end_components(pmdp, allowed)) {
            const bool meets_all = std::all_of(clause.inf.begin(), clause.inf.end(), [&](const std::vector<char>& m) {
                return std::any_of(c.states.begin(), c.states.end(), [&](std::size_t s) { return m[s] != 0; });
            });
            if (!meets_all) continue;
            c.clause = k;
            out.push_back(std::move(c));
        }
    }
    return out;
}

StochasticPolicy deterministic_policy(const ExplicitPmdp& pmdp, const std::vector<ActionId>& actions) {
    if (actions.size() != pmdp.num_states()) throw OracleError("policy size mismatch");
    StochasticPolicy p(pmdp.num_states());
    for (std::size_t s = 0; s < p.size(); ++s) {
        p[s].assign(pmdp.num_actions(s), 0.0);
        if (!p[s].empty()) p[s].at(static_cast<std::size_t>(actions[s])) = 1.0;
    }
    return p;
}

namespace {

void check_policy(const ExplicitPmdp& pmdp, const StochasticPolicy& policy) {
    if (policy.size() != pmdp.num_states()) throw OracleError("policy size mismatch");
    for (std::size_t s = 0; s < policy.size(); ++s) {
        if (policy[s].size() != pmdp.num_actions(s)) throw OracleError("policy row has the wrong number of actions");
        if (policy[s].empty()) continue;
        const double sum = std::accumulate(policy[s].begin(), policy[s].end(), 0.0);
        if (std::abs(sum - 1.0) > 1e-9) throw OracleError("policy row does not sum to 1");
    }
}

double row_value(const ExplicitPmdp& pmdp, std::size_t s, ActionId a, const std::vector<double>& v) {
    double x = 0.0;
    for (const auto& e : pmdp.row(s, a)) x += e.prob * v[e.target];
    return x;
}

} // namespace

std::vector<double> reach_probability(const ExplicitPmdp& pmdp, const std::vector<char>& target,
                                      const StochasticPolicy* policy, double tolerance) {
    const std::size_t n = pmdp.num_states();
    if (target.size() != n) throw OracleError("target mask size mismatch");
    if (policy) check_policy(pmdp, *policy);
    auto used = [&](std::size_t s, std::size_t a) { return !policy || (*policy)[s][a] > 0.0; };

    // states that can reach the target at all (graph backward search)
    std::vector<std::vector<std::size_t>> reverse(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < pmdp.num_actions(s); ++a)
            if (used(s, a))
                for (const auto& e : pmdp.row(s, static_cast<ActionId>(a)))
                    if (e.prob > 0.0) reverse[e.target].push_back(s);
    std::vector<char> live(n, 0);
    std::vector<std::size_t> queue;
    for (std::size_t s = 0; s < n; ++s)
        if (target[s]) {
            live[s] = 1;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        const std::size_t y = queue.back();
        queue.pop_back();
        for (std::size_t x : reverse[y])
            if (!live[x]) {
                live[x] = 1;
                queue.push_back(x);
            }
    }

    std::vector<double> v(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) v[s] = target[s] ? 1.0 : 0.0;
    for (;;) {
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (target[s] || !live[s]) continue;
            double best = 0.0;
            for (std::size_t a = 0; a < pmdp.num_actions(s); ++a) {
                const double x = row_value(pmdp, s, static_cast<ActionId>(a), v);
                if (policy) best += (*policy)[s][a] * x;
                else best = std::max(best, x);
            }
            change = std::max(change, std::abs(best - v[s]));
            v[s] = best;
        }
        if (change < tolerance) break;
    }
    return v;
}

std::vector<double> max_sat_probability(const ExplicitPmdp& pmdp, double tolerance) {
    std::vector<char> target(pmdp.num_states(), 0);
    for (const auto& c : accepting_mecs(pmdp))
        for (std::size_t s : c.states) target[s] = 1;
    return reach_probability(pmdp, target, nullptr, tolerance);
}

std::vector<double> policy_sat_probability(const ExplicitPmdp& pmdp, const StochasticPolicy& policy,
                                           double tolerance) {
    check_policy(pmdp, policy);
    const std::size_t n = pmdp.num_states();
    std::vector<char> all(n, 1);
    auto succ = [&](std::size_t s, auto&& f) {
        for (std::size_t a = 0; a < policy[s].size(); ++a)
            if (policy[s][a] > 0.0)
                for (const auto& e : pmdp.row(s, static_cast<ActionId>(a)))
                    if (e.prob > 0.0) f(e.target);
    };
    const auto [comp, count] = strongly_connected(n, all, succ);
    std::vector<char> bottom(count, 1);
    for (std::size_t s = 0; s < n; ++s) succ(s, [&](std::size_t t) {
            if (comp[t] != comp[s]) bottom[comp[s]] = 0;
        });
    // a bottom component is accepting when some clause holds on its states
    std::vector<std::vector<std::size_t>> members(count);
    for (std::size_t s = 0; s < n; ++s) members[comp[s]].push_back(s);
    std::vector<char> target(n, 0);
    for (std::size_t c = 0; c < count; ++c) {
        if (!bottom[c]) continue;
        bool ok = false;
        for (const auto& clause : pmdp.acceptance()) {
            const bool avoids = clause.fin.empty() || std::none_of(members[c].begin(), members[c].end(),
                                                                    [&](std::size_t s) { return clause.fin[s] != 0; });
            const bool meets = std::all_of(clause.inf.begin(), clause.inf.end(), [&](const std::vector<char>& m) {
                return std::any_of(members[c].begin(), members[c].end(), [&](std::size_t s) { return m[s] != 0; });
            });
            ok = ok || (avoids && meets);
        }
        if (ok)
            for (std::size_t s : members[c]) target[s] = 1;
    }
    return reach_probability(pmdp, target, &policy, tolerance);
}

std::vector<double> transition_rewards(const ExplicitPmdp& pmdp, const ProductSpace& space,
                                       const RewardParams& params) {
    if (!space.rabin()) throw OracleError("transition rewards are only defined for Rabin products");
    if (space.num_states() != pmdp.num_states()) throw OracleError("product and explicit MDP disagree");
    std::vector<double> r(pmdp.num_entries(), 0.0);
    for (std::size_t s = 0; s < pmdp.num_states(); ++s)
        for (std::size_t a = 0; a < pmdp.num_actions(s); ++a) {
            const auto act = static_cast<ActionId>(a);
            std::size_t k = pmdp.entry_offset(s, act);
            for (const auto& e : pmdp.row(s, act))
                r[k++] = pmdp.is_epsilon(s, act) ? params.neutral()
                                                  : rabin_reward(space.state_at(e.target), *space.rabin(), params);
        }
    return r;
}

namespace {

double stop_threshold(double gamma, double tolerance) {
    return gamma > 0.0 ? tolerance * (1.0 - gamma) / gamma : 0.0;
}

double backup(const ExplicitPmdp& pmdp, std::size_t s, ActionId a, const std::vector<double>& rewards,
              const std::vector<double>& v, double gamma) {
    double x = 0.0;
    std::size_t k = pmdp.entry_offset(s, a);
    for (const auto& e : pmdp.row(s, a)) x += e.prob * (rewards[k++] + gamma * v[e.target]);
    return x;
}

} // namespace

std::vector<double> evaluate_policy(const ExplicitPmdp& pmdp, const StochasticPolicy& policy,
                                    const std::vector<double>& rewards, double gamma, double tolerance) {
    check_policy(pmdp, policy);
    if (rewards.size() != pmdp.num_entries()) throw OracleError("reward vector size mismatch");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw OracleError("gamma must lie in [0,1)");
    const std::size_t n = pmdp.num_states();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    const double stop = stop_threshold(gamma, tolerance);
    for (;;) {
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double x = 0.0;
            for (std::size_t a = 0; a < policy[s].size(); ++a)
                if (policy[s][a] > 0.0) x += policy[s][a] * backup(pmdp, s, static_cast<ActionId>(a), rewards, v, gamma);
            next[s] = x;
            change = std::max(change, std::abs(x - v[s]));
        }
        v.swap(next);
        if (change <= stop) break;
    }
    return v;
}

QTable action_values(const ExplicitPmdp& pmdp, const std::vector<double>& rewards, const std::vector<double>& values,
                     double gamma, std::size_t stride) {
    QTable q(pmdp.num_states(), stride);
    for (std::size_t s = 0; s < pmdp.num_states(); ++s)
        for (std::size_t a = 0; a < pmdp.num_actions(s); ++a)
            q.set(s, static_cast<ActionId>(a), backup(pmdp, s, static_cast<ActionId>(a), rewards, values, gamma));
    return q;
}

QTable optimal_action_values(const ExplicitPmdp& pmdp, const std::vector<double>& rewards, double gamma,
                             std::size_t stride, double tolerance) {
    if (rewards.size() != pmdp.num_entries()) throw OracleError("reward vector size mismatch");
    const std::size_t n = pmdp.num_states();
    std::vector<double> v(n, 0.0), next(n, 0.0);
    const double stop = stop_threshold(gamma, tolerance);
    for (;;) {
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            double best = pmdp.num_actions(s) ? -kInfinity : 0.0;
            for (std::size_t a = 0; a < pmdp.num_actions(s); ++a)
                best = std::max(best, backup(pmdp, s, static_cast<ActionId>(a), rewards, v, gamma));
            next[s] = best;
            change = std::max(change, std::abs(best - v[s]));
        }
        v.swap(next);
        if (change <= stop) break;
    }
    return action_values(pmdp, rewards, v, gamma, stride);
}

StochasticPolicy exploration_policy(const ExplicitPmdp& pmdp, const std::vector<ActionId>& greedy,
                                    const std::vector<std::optional<ActionId>>& biased,
                                    const ExplorationParams& params) {
    const std::size_t n = pmdp.num_states();
    if (greedy.size() != n || (!biased.empty() && biased.size() != n)) throw OracleError("policy size mismatch");
    StochasticPolicy p(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t m = pmdp.num_actions(s);
        if (m == 0) continue;
        p[s] = exploration_masses(m, greedy[s], biased.empty() ? std::nullopt : biased[s], params);
    }
    return p;
}

std::vector<std::optional<ActionId>> true_biased_actions(const ProductSpace& space, BiasOptions options) {
    options.selection = CloserSelection::max_prob;
    TrueKernel kernel(space.mdp());
    BiasContext ctx(space, kernel, options);
    Rng unused(0);
    std::vector<std::optional<ActionId>> out(space.num_states());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ctx.biased_product_action(space.state_at(i), unused);
    return out;
}

ImprovementReport verify_policy_improvement(const ProductSpace& space, const ExplicitPmdp& pmdp,
                                            const ImprovementOptions& options) {
    if (pmdp.num_states() > 500) throw OracleError("policy-improvement check is limited to 500 states");
    const auto rewards = transition_rewards(pmdp, space, options.rewards);
    const auto biased = true_biased_actions(space);
    const std::size_t n = pmdp.num_states();
    const std::size_t stride = space.max_actions();
    Rng rng(options.seed);
    ImprovementReport report;
    report.trials = options.trials;
    for (std::size_t t = 0; t < options.trials; ++t) {
        ExplorationParams params;
        params.epsilon = rng.uniform();
        params.delta_b = options.zero_bias ? 0.0 : params.epsilon * rng.uniform();
        params.delta_e = params.epsilon - params.delta_b;
        QTable q(n, stride);
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t a = 0; a < pmdp.num_actions(s); ++a) q.set(s, static_cast<ActionId>(a), 2.0 * rng.uniform() - 1.0);
        auto greedy_of = [&](const QTable& table) {
            std::vector<ActionId> g(n, 0);
            for (std::size_t s = 0; s < n; ++s)
                if (pmdp.num_actions(s)) g[s] = table.greedy(s, pmdp.num_actions(s));
            return g;
        };
        const auto mu = exploration_policy(pmdp, greedy_of(q), biased, params);
        const auto u = evaluate_policy(pmdp, mu, rewards, options.gamma);
        const auto q_mu = action_values(pmdp, rewards, u, options.gamma, stride);
        const auto mu2 = exploration_policy(pmdp, greedy_of(q_mu), biased, params);
        const auto u2 = evaluate_policy(pmdp, mu2, rewards, options.gamma);
        for (std::size_t s = 0; s < n; ++s) {
            const double deficit = u[s] - u2[s];
            report.worst_deficit = std::max(report.worst_deficit, deficit);
            if (deficit > options.tolerance) report.violations.push_back({t, s, deficit});
        }
    }
    return report;
}

BiasInstance hallway_instance(BiasTheorem theorem, int cells, int start_cell, double p_move,
                              ExplorationParams params) {
    if (cells < 3) throw std::invalid_argument("hallway needs at least 3 cells");
    if (start_cell <= 0 || start_cell >= cells - 1) throw std::invalid_argument("start must be an interior cell");
    if (!(p_move > 0.0 && p_move <= 1.0)) throw std::invalid_argument("p_move must lie in (0,1]");
    const double side = (1.0 - p_move) / 2.0;
    KernelRows rows(static_cast<std::size_t>(cells));
    std::vector<Symbol> labels(static_cast<std::size_t>(cells));
    labels.front() = Symbol{1};
    labels.back() = Symbol{2};
    for (int x = 0; x < cells; ++x) {
        auto& r = rows[static_cast<std::size_t>(x)];
        if (x == 0 || x == cells - 1) {
            r = {{{x, 1.0}}, {{x, 1.0}}};
            continue;
        }
        r = {{{x - 1, p_move}, {x, side}, {x + 1, side}}, {{x + 1, p_move}, {x, side}, {x - 1, side}}};
    }
    LabeledMdp mdp(start_cell, rows, std::move(labels), {"left", "right"});

    const std::vector<PropId> aps{1, 2};
    const Guard exit = Guard::prop(1) || Guard::prop(2);
    RabinAutomaton automaton = [&] {
        if (theorem == BiasTheorem::goal_set) {
            TransitionStructure s(2, aps);
            s.add_edge(0, exit, 1);
            s.add_edge(0, !exit, 0);
            s.add_edge(1, Guard::always(), 1);
            return RabinAutomaton(std::move(s), 0, {RabinPair{{1}, {}}}, {"search", "out"});
        }
        TransitionStructure s(3, aps);
        s.add_edge(0, Guard::prop(1), 1);
        s.add_edge(0, Guard::prop(2) && Guard::not_prop(1), 2);
        s.add_edge(0, !exit, 0);
        s.add_edge(1, Guard::always(), 1);
        s.add_edge(2, Guard::always(), 2);
        return RabinAutomaton(std::move(s), 0, {RabinPair{{1, 2}, {}}}, {"search", "out_left", "out_right"});
    }();

    // greedy action pointing away from the nearer exit
    std::vector<ActionId> greedy(static_cast<std::size_t>(cells));
    for (int x = 0; x < cells; ++x) greedy[static_cast<std::size_t>(x)] = x <= (cells - 1) / 2 ? 1 : 0;
    return BiasInstance{theorem == BiasTheorem::goal_set ? "hallway-goal-set" : "hallway-single-target",
                        theorem,
                        std::move(mdp),
                        std::move(automaton),
                        ProductState{start_cell, 0},
                        std::move(greedy),
                        params};
}

ProportionEstimate wilson_interval(std::size_t successes, std::size_t trials, double z) {
    ProportionEstimate e;
    e.successes = successes;
    e.trials = trials;
    if (trials == 0) {
        e.upper = 1.0;
        return e;
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    e.estimate = p;
    e.lower = std::max(0.0, center - half);
    e.upper = std::min(1.0, center + half);
    return e;
}

namespace {

std::size_t sample_index(const std::vector<double>& masses, Rng& rng) {
    double u = rng.uniform();
    for (std::size_t i = 0; i < masses.size(); ++i) {
        u -= masses[i];
        if (u < 0.0) return i;
    }
    // rounding: fall back to the last action with positive mass
    for (std::size_t i = masses.size(); i-- > 0;)
        if (masses[i] > 0.0) return i;
    return 0;
}

/// Probability mass per product state after `steps` steps from `start`.
std::vector<double> propagate(const ExplicitPmdp& pmdp, const StochasticPolicy& policy, std::size_t start,
                              int steps) {
    std::vector<double> dist(pmdp.num_states(), 0.0), next(pmdp.num_states(), 0.0);
    dist[start] = 1.0;
    for (int t = 0; t < steps; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < dist.size(); ++s) {
            if (dist[s] == 0.0) continue;
            for (std::size_t a = 0; a < policy[s].size(); ++a) {
                const double w = dist[s] * policy[s][a];
                if (w == 0.0) continue;
                for (const auto& e : pmdp.row(s, static_cast<ActionId>(a))) next[e.target] += w * e.prob;
            }
        }
        dist.swap(next);
    }
    return dist;
}

std::size_t simulate_hits(const ProductSpace& space, const StochasticPolicy& policy, ProductState start, int steps,
                          const std::function<bool(AutState)>& event, std::size_t trials, Rng& rng) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        ProductState s = start;
        for (int t = 0; t < steps; ++t) {
            const auto a = static_cast<ActionId>(sample_index(policy[space.index(s)], rng));
            s = product_step(space, s, a, rng).next;
        }
        if (event(s.q)) ++hits;
    }
    return hits;
}

} // namespace

BiasTheoremReport verify_bias_theorem(const BiasInstance& inst, std::size_t trials, std::uint64_t seed) {
    ProductSpace space(inst.mdp, inst.automaton);
    TrueKernel kernel(inst.mdp);
    BiasContext ctx(space, kernel);
    Rng unused(0);
    const AutState q = inst.start.q;
    const auto& sets = ctx.goal_sets(q);
    if (sets.empty()) throw HypothesisError("no automaton progress is possible from the start state");
    const double j = ctx.cost_field(q).at(inst.start.x);
    if (j == kInfinity || j <= 0.0) throw HypothesisError("start state is not strictly away from X_goal");
    const int k_star = static_cast<int>(std::lround(j));

    // hypothesis along every state of X_closer^n(x_cur), n < k*
    std::vector<MdpState> layer{inst.start.x};
    for (int n = 0; n < k_star; ++n) {
        std::vector<MdpState> next;
        for (MdpState x : layer) {
            const auto closer = ctx.closer_set(q, x);
            const auto choice = ctx.biased_action(q, x, unused);
            if (!choice) throw HypothesisError("no biased action at MDP state " + std::to_string(x));
            const double pb = kernel.prob(x, choice->action, choice->target);
            const std::size_t m = kernel.num_actions(x);
            for (MdpState y : closer) {
                double avg = 0.0, top = 0.0;
                for (std::size_t a = 0; a < m; ++a) {
                    avg += kernel.prob(x, static_cast<ActionId>(a), y) / static_cast<double>(m);
                    if (y == choice->target) top = std::max(top, kernel.prob(x, static_cast<ActionId>(a), y));
                }
                if (inst.theorem == BiasTheorem::goal_set && !(pb > avg))
                    throw HypothesisError("P(x,a_b,x_b) does not exceed the action average at MDP state " +
                                          std::to_string(x));
                if (inst.theorem == BiasTheorem::single_target && y == choice->target && pb < top)
                    throw HypothesisError("a_b is not the most likely action towards x_b at MDP state " +
                                          std::to_string(x));
            }
            next.insert(next.end(), closer.begin(), closer.end());
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        layer = std::move(next);
    }

    const auto pmdp = materialize(space);
    std::vector<ActionId> greedy(space.num_states());
    for (std::size_t i = 0; i < greedy.size(); ++i) greedy[i] = inst.greedy.at(space.state_at(i).x);
    const auto biased = true_biased_actions(space);
    ExplorationParams control = inst.params;
    control.delta_b = 0.0;
    control.delta_e = control.epsilon;
    const auto mu_b = exploration_policy(pmdp, greedy, biased, inst.params);
    const auto mu_g = exploration_policy(pmdp, greedy, {}, inst.params);
    const auto mu_c = exploration_policy(pmdp, greedy, biased, control);
    const auto mu_cg = exploration_policy(pmdp, greedy, {}, control);
    const std::size_t start = space.index(inst.start);
    const int steps = k_star + 1;

    BiasTheoremReport r;
    r.instance = inst.name;
    r.theorem = inst.theorem;
    r.k_star = k_star;
    r.q_goal = sets.q_goal;

    auto mass_on = [&](const std::vector<double>& dist, const std::function<bool(AutState)>& event) {
        double p = 0.0;
        for (std::size_t s = 0; s < dist.size(); ++s)
            if (event(space.state_at(s).q)) p += dist[s];
        return p;
    };
    const auto db = propagate(pmdp, mu_b, start, steps);
    const auto dg = propagate(pmdp, mu_g, start, steps);
    std::function<bool(AutState)> event = [&](AutState t) {
        return std::binary_search(sets.q_goal.begin(), sets.q_goal.end(), t);
    };
    if (inst.theorem == BiasTheorem::single_target) {
        double best = -kInfinity;
        for (AutState t : sets.q_goal) {
            auto only = [t](AutState u) { return u == t; };
            const double diff = mass_on(db, only) - mass_on(dg, only);
            if (diff > best) {
                best = diff;
                r.target_q = t;
            }
        }
        event = [t = r.target_q](AutState u) { return u == t; };
    }
    r.biased.exact_biased = mass_on(db, event);
    r.biased.exact_unbiased = mass_on(dg, event);
    r.control.exact_biased = mass_on(propagate(pmdp, mu_c, start, steps), event);
    r.control.exact_unbiased = mass_on(propagate(pmdp, mu_cg, start, steps), event);

    Rng rb(seed), rg(seed + 1), rc(seed + 2), rcg(seed + 3);
    r.biased.mc_biased = wilson_interval(simulate_hits(space, mu_b, inst.start, steps, event, trials, rb), trials);
    r.biased.mc_unbiased = wilson_interval(simulate_hits(space, mu_g, inst.start, steps, event, trials, rg), trials);
    r.control.mc_biased = wilson_interval(simulate_hits(space, mu_c, inst.start, steps, event, trials, rc), trials);
    r.control.mc_unbiased = wilson_interval(simulate_hits(space, mu_cg, inst.start, steps, event, trials, rcg), trials);

    r.exact_separated = r.biased.exact_biased > r.biased.exact_unbiased;
    r.intervals_separated = r.biased.mc_biased.lower > r.biased.mc_unbiased.upper;
    r.control_equal = std::abs(r.control.exact_biased - r.control.exact_unbiased) <= 1e-12;
    r.control_overlap = r.control.mc_biased.lower <= r.control.mc_unbiased.upper &&
                        r.control.mc_unbiased.lower <= r.control.mc_biased.upper;
    return r;
}

nlohmann::json to_json(const ImprovementReport& r) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : r.violations) v.push_back({{"trial", x.trial}, {"state", x.state}, {"deficit", x.deficit}});
    return {{"trials", r.trials}, {"violations", v}, {"worst_deficit", r.worst_deficit}, {"passed", r.passed()}};
}

nlohmann::json to_json(const ProportionEstimate& e) {
    return {{"successes", e.successes}, {"trials", e.trials}, {"estimate", e.estimate},
            {"lower", e.lower},         {"upper", e.upper}};
}

nlohmann::json to_json(const BiasTheoremReport& r) {
    auto cmp = [](const BiasComparison& c) {
        return nlohmann::json{{"exact_biased", c.exact_biased},
                              {"exact_unbiased", c.exact_unbiased},
                              {"mc_biased", to_json(c.mc_biased)},
                              {"mc_unbiased", to_json(c.mc_unbiased)}};
    };
    return {{"instance", r.instance},
            {"event", r.theorem == BiasTheorem::goal_set ? "goal_set" : "single_target"},
            {"k_star", r.k_star},
            {"q_goal", r.q_goal},
            {"target_q", r.target_q},
            {"biased", cmp(r.biased)},
            {"control", cmp(r.control)},
            {"exact_separated", r.exact_separated},
            {"intervals_separated", r.intervals_separated},
            {"control_equal", r.control_equal},
            {"control_overlap", r.control_overlap},
            {"passed", r.passed()}};
}

RabinAutomaton random_rabin_automaton(Rng& rng, std::size_t max_states, std::size_t max_aps) {
    const std::size_t n = 1 + rng.below(max_states);
    const std::size_t k = 1 + rng.below(max_aps);
    std::vector<PropId> aps;
    for (std::size_t i = 0; i < k; ++i) aps.push_back(static_cast<PropId>(i + 1));
    TransitionStructure t(n, aps);
    const auto symbols = feasible_symbols(aps);
    for (std::size_t q = 0; q < n; ++q) {
        const auto from = static_cast<AutState>(q);
        // sparse graphs keep some distances infinite
        const bool stay_home = rng.uniform() < 0.3;
        for (const auto& sigma : symbols) {
            Guard g = Guard::always();
            for (PropId p : aps)
                g = g && (sigma.contains(p) ? Guard::prop(p) : Guard::not_prop(p));
            const auto to = stay_home && rng.uniform() < 0.7 ? from : static_cast<AutState>(rng.below(n));
            t.add_edge(from, g, to);
        }
        if (k >= 2 && rng.uniform() < 0.5)
            t.add_edge(from, Guard::prop(aps[0]) && Guard::prop(aps[1]), static_cast<AutState>(rng.below(n)));
    }
    std::vector<RabinPair> pairs(1 + rng.below(2));
    for (auto& p : pairs)
        for (std::size_t q = 0; q < n; ++q) {
            const double u = rng.uniform();
            if (u < 0.15) p.good.push_back(static_cast<AutState>(q));
            else if (u < 0.3) p.bad.push_back(static_cast<AutState>(q));
        }
    return RabinAutomaton(std::move(t), static_cast<AutState>(rng.below(n)), std::move(pairs));
}

std::vector<std::vector<int>> all_pairs_hops(const RabinAutomaton& a) {
    const std::size_t n = a.size();
    constexpr long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<std::vector<long long>> d(n, std::vector<long long>(n, inf));
    const auto symbols = feasible_symbols(a.aps());
    for (std::size_t q = 0; q < n; ++q) {
        d[q][q] = 0;
        for (const auto& sigma : symbols) {
            const auto r = static_cast<std::size_t>(a.step(static_cast<AutState>(q), sigma));
            if (r != q) d[q][r] = 1;
        }
    }
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][m] + d[m][j]);
    std::vector<std::vector<int>> out(n, std::vector<int>(n, kUnreachable));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (d[i][j] < inf) out[i][j] = static_cast<int>(d[i][j]);
    return out;
}

DistanceCheck verify_distance_table(const RabinAutomaton& a) {
    DistanceCheck c;
    c.table = a.distances();
    const auto hops = all_pairs_hops(a);
    const auto goal = a.accepting_states();
    c.brute_force.assign(a.size(), kUnreachable);
    for (std::size_t q = 0; q < a.size(); ++q)
        for (AutState g : goal) c.brute_force[q] = std::min(c.brute_force[q], hops[q][static_cast<std::size_t>(g)]);
    return c;
}

nlohmann::json to_json(const DistanceCheck& c) {
    auto encode = [](const std::vector<int>& v) {
        nlohmann::json out = nlohmann::json::array();
        for (int d : v) out.push_back(d == kUnreachable ? nlohmann::json("inf") : nlohmann::json(d));
        return out;
    };
    return {{"table", encode(c.table)}, {"brute_force", encode(c.brute_force)}, {"matches", c.matches()}};
}

} // namespace ltlrl
