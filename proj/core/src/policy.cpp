#include "ltlrl/policy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>

namespace ltlrl {

QTable::QTable(std::size_t num_states, std::size_t stride, double initial)
    : num_states_(num_states),
      stride_(stride),
      q_(num_states * stride, initial),
      n_(num_states * stride, 0),
      visits_(num_states, 0) {}

double QTable::update(std::size_t s, ActionId a, double target) {
    const auto i = slot(s, a);
    const double before = q_[i];
    ++n_[i];
    ++visits_[s];
    q_[i] += (target - before) / static_cast<double>(n_[i]);
    return std::abs(q_[i] - before);
}

void QTable::set_count(std::size_t s, ActionId a, std::uint64_t n) {
    auto& slot_count = n_[slot(s, a)];
    visits_[s] = visits_[s] - slot_count + n;
    slot_count = n;
}

ActionId QTable::greedy(std::size_t s, std::size_t m) const {
    const double* row = q_.data() + s * stride_;
    std::size_t best = 0;
    for (std::size_t a = 1; a < m; ++a)
        if (row[a] > row[best]) best = a;
    return static_cast<ActionId>(best);
}

double QTable::max_value(std::size_t s, std::size_t m) const {
    if (m == 0) return 0.0;
    return q_[s * stride_ + static_cast<std::size_t>(greedy(s, m))];
}

double QTable::max_abs() const {
    double m = 0.0;
    for (double v : q_) m = std::max(m, std::abs(v));
    return m;
}

nlohmann::json to_json(const QTable& t) {
    nlohmann::json counts = nlohmann::json::array();
    for (std::size_t s = 0; s < t.num_states(); ++s)
        for (std::size_t a = 0; a < t.stride(); ++a) counts.push_back(t.count(s, static_cast<ActionId>(a)));
    return {{"states", t.num_states()}, {"stride", t.stride()}, {"values", t.values()}, {"counts", counts}};
}

QTable qtable_from_json(const nlohmann::json& j) {
    const auto states = j.at("states").get<std::size_t>();
    const auto stride = j.at("stride").get<std::size_t>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != states * stride) throw std::invalid_argument("Q table size mismatch");
    QTable t(states, stride);
    for (std::size_t i = 0; i < values.size(); ++i) t.set(i / stride, static_cast<ActionId>(i % stride), values[i]);
    if (j.contains("counts")) {
        const auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
        if (counts.size() != values.size()) throw std::invalid_argument("Q table count size mismatch");
        for (std::size_t i = 0; i < counts.size(); ++i)
            t.set_count(i / stride, static_cast<ActionId>(i % stride), counts[i]);
    }
    return t;
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::eps_delta_greedy: return "eps_delta_greedy";
    case PolicyKind::eps_greedy: return "eps_greedy";
    case PolicyKind::boltzmann: return "boltzmann";
    case PolicyKind::ucb1: return "ucb1";
    }
    return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
    for (auto k : {PolicyKind::eps_delta_greedy, PolicyKind::eps_greedy, PolicyKind::boltzmann, PolicyKind::ucb1})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown policy kind \"" + name + "\"");
}

void validate(const ExplorationSchedule& s) {
    auto unit = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
    };
    unit(s.epsilon_start, "epsilon_start");
    unit(s.epsilon_decay, "epsilon_decay");
    unit(s.epsilon_floor, "epsilon_floor");
    unit(s.random_share_start, "random_share_start");
    unit(s.random_share_decay, "random_share_decay");
    unit(s.random_share_floor, "random_share_floor");
    unit(s.temperature_decay, "temperature_decay");
    if (s.temperature_start < 0.0 || s.temperature_floor < 0.0) throw std::invalid_argument("temperature must be >= 0");
    if (s.ucb_c < 0.0) throw std::invalid_argument("ucb_c must be >= 0");
}

ExplorationParams decay_params(const ExplorationSchedule& s, std::uint64_t k) {
    const double kk = static_cast<double>(k);
    ExplorationParams p;
    p.epsilon = std::max(s.epsilon_floor, s.epsilon_start * std::pow(s.epsilon_decay, kk));
    const double share = std::max(s.random_share_floor, s.random_share_start * std::pow(s.random_share_decay, kk));
    p.delta_e = p.epsilon * std::min(1.0, share);
    p.delta_b = p.epsilon - p.delta_e;
    p.temperature = std::max(s.temperature_floor, s.temperature_start * std::pow(s.temperature_decay, kk));
    p.ucb_c = s.ucb_c;
    return p;
}

nlohmann::json to_json(const ExplorationSchedule& s) {
    return {{"epsilon_start", s.epsilon_start},
            {"epsilon_decay", s.epsilon_decay},
            {"epsilon_floor", s.epsilon_floor},
            {"random_share_start", s.random_share_start},
            {"random_share_decay", s.random_share_decay},
            {"random_share_floor", s.random_share_floor},
            {"temperature_start", s.temperature_start},
            {"temperature_decay", s.temperature_decay},
            {"temperature_floor", s.temperature_floor},
            {"ucb_c", s.ucb_c},
            {"clock", s.clock == ScheduleClock::step ? "step" : "episode"}};
}

ExplorationSchedule schedule_from_json(const nlohmann::json& j, ExplorationSchedule d) {
    d.epsilon_start = j.value("epsilon_start", d.epsilon_start);
    d.epsilon_decay = j.value("epsilon_decay", d.epsilon_decay);
    d.epsilon_floor = j.value("epsilon_floor", d.epsilon_floor);
    d.random_share_start = j.value("random_share_start", d.random_share_start);
    d.random_share_decay = j.value("random_share_decay", d.random_share_decay);
    d.random_share_floor = j.value("random_share_floor", d.random_share_floor);
    d.temperature_start = j.value("temperature_start", d.temperature_start);
    d.temperature_decay = j.value("temperature_decay", d.temperature_decay);
    d.temperature_floor = j.value("temperature_floor", d.temperature_floor);
    d.ucb_c = j.value("ucb_c", d.ucb_c);
    if (j.contains("clock")) {
        const auto c = j.at("clock").get<std::string>();
        if (c == "step") d.clock = ScheduleClock::step;
        else if (c == "episode") d.clock = ScheduleClock::episode;
        else throw std::invalid_argument("clock must be \"step\" or \"episode\"");
    }
    validate(d);
    return d;
}

std::vector<double> exploration_masses(std::size_t m, ActionId greedy, std::optional<ActionId> biased,
                                       const ExplorationParams& p) {
    std::vector<double> mass(m, 0.0);
    if (m == 0) return mass;
    const double random = biased ? p.delta_e : p.epsilon;
    const double each = random / static_cast<double>(m);
    std::fill(mass.begin(), mass.end(), each);
    mass.at(static_cast<std::size_t>(greedy)) += 1.0 - p.epsilon;
    if (biased) mass.at(static_cast<std::size_t>(*biased)) += p.delta_b;
    return mass;
}

std::vector<double> boltzmann_probabilities(const std::vector<double>& q, double temperature) {
    std::vector<double> p(q.size(), 0.0);
    if (q.empty()) return p;
    if (temperature <= 0.0) {
        p[static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin())] = 1.0;
        return p;
    }
    const double top = *std::max_element(q.begin(), q.end());
    double z = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) z += p[a] = std::exp((q[a] - top) / temperature);
    for (double& v : p) v /= z;
    return p;
}

BiasContext::BiasContext(const ProductSpace& space, const KernelView& model, BiasOptions options)
    : space_(&space), model_(&model), options_(options) {
    if (model.num_states() != space.num_mdp_states())
        throw std::invalid_argument("model and product disagree on the number of MDP states");
    const std::size_t sets = space.is_ldba() ? space.ldba()->num_sets() : 1;
    entries_.resize(sets * space.num_automaton_states());
}

int BiasContext::distance(AutState q, std::size_t j) const {
    return space_->is_ldba() ? space_->ldba()->distance(j, q) : space_->rabin()->distance(q);
}

const Adjacency& BiasContext::pruned() const {
    return space_->is_ldba() ? space_->ldba()->pruned() : space_->rabin()->pruned();
}

BiasContext::Entry& BiasContext::entry(AutState q, std::size_t j) {
    const std::size_t nq = space_->num_automaton_states();
    if (q < 0 || static_cast<std::size_t>(q) >= nq) throw std::out_of_range("automaton state out of range");
    if (j * nq >= entries_.size()) throw std::out_of_range("target set out of range");
    auto& e = entries_[j * nq + static_cast<std::size_t>(q)];
    if (!e.ready) {
        compute_goal_sets(e, q, j);
        e.ready = true;
    }
    return e;
}

void BiasContext::compute_goal_sets(Entry& e, AutState q, std::size_t j) const {
    GoalSets& g = e.sets;
    const int d = distance(q, j);
    const std::size_t nx = space_->num_mdp_states();
    g.avoid.assign(nx, 0);
    if (d == kUnreachable || (d == 0 && !options_.bias_at_accepting)) return;
    const int want = d == 0 ? 0 : d - 1;
    for (AutState t : pruned().at(q))
        if (distance(t, j) == want) g.q_goal.push_back(t);
    if (g.q_goal.empty()) return;
    auto in_goal = [&](AutState t) { return std::binary_search(g.q_goal.begin(), g.q_goal.end(), t); };
    for (std::size_t x = 0; x < nx; ++x) {
        const AutState t = space_->next_q(q, static_cast<MdpState>(x));
        if (in_goal(t)) g.x_goal.push_back(static_cast<MdpState>(x));
        else if (options_.avoid == AvoidRule::literal || t != q) g.avoid[x] = 1;
    }
    const auto& eps = space_->epsilon_moves(q);
    for (std::size_t k = 0; k < eps.size(); ++k)
        if (in_goal(eps[k])) g.epsilon_actions.push_back(static_cast<ActionId>(k));
}

std::uint64_t BiasContext::model_version() const {
    return options_.weighting == GraphWeighting::unit ? model_->support_version() : model_->value_version();
}

void BiasContext::refresh_reverse() {
    if (reverse_version_ == model_->support_version()) return;
    const std::size_t nx = model_->num_states();
    reverse_.assign(nx, {});
    for (std::size_t x = 0; x < nx; ++x)
        for (MdpState y : model_->successors(static_cast<MdpState>(x))) reverse_[y].push_back(static_cast<MdpState>(x));
    reverse_version_ = model_->support_version();
}

void BiasContext::compute_cost(Entry& e) {
    refresh_reverse();
    const auto& g = e.sets;
    const std::size_t nx = model_->num_states();
    e.cost.assign(nx, kInfinity);
    if (options_.weighting == GraphWeighting::unit) {
        std::deque<MdpState> frontier;
        for (MdpState x : g.x_goal) {
            e.cost[x] = 0.0;
            frontier.push_back(x);
        }
        while (!frontier.empty()) {
            const MdpState y = frontier.front();
            frontier.pop_front();
            for (MdpState x : reverse_[y]) {
                if (g.avoid[x] || e.cost[x] != kInfinity) continue;
                e.cost[x] = e.cost[y] + 1.0;
                frontier.push_back(x);
            }
        }
    } else {
        using Item = std::pair<double, MdpState>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        for (MdpState x : g.x_goal) {
            e.cost[x] = 0.0;
            heap.push({0.0, x});
        }
        while (!heap.empty()) {
            auto [c, y] = heap.top();
            heap.pop();
            if (c > e.cost[y]) continue;
            for (MdpState x : reverse_[y]) {
                if (g.avoid[x]) continue;
                const double nc = c + edge_weight(*model_, x, y, GraphWeighting::reciprocal);
                if (nc < e.cost[x]) {
                    e.cost[x] = nc;
                    heap.push({nc, x});
                }
            }
        }
    }
    e.version = model_version();
}

const GoalSets& BiasContext::goal_sets(AutState q, std::size_t j) { return entry(q, j).sets; }

const std::vector<double>& BiasContext::cost_field(AutState q, std::size_t j) {
    auto& e = entry(q, j);
    if (e.version != model_version()) compute_cost(e);
    return e.cost;
}

std::vector<MdpState> BiasContext::closer_set(AutState q, MdpState x_cur, std::size_t j) {
    std::vector<MdpState> out;
    if (entry(q, j).sets.empty()) return out;
    const auto& cost = cost_field(q, j);
    const double here = cost.at(x_cur);
    if (here == kInfinity || here == 0.0) return out;
    for (MdpState y : model_->successors(x_cur)) {
        if (y == x_cur || cost[y] == kInfinity) continue;
        const double w = edge_weight(*model_, x_cur, y, options_.weighting);
        if (std::abs(cost[y] + w - here) <= 1e-9 * std::max(1.0, here)) out.push_back(y);
    }
    return out;
}

std::optional<BiasedChoice> BiasContext::biased_action(AutState q, MdpState x_cur, Rng& rng, std::size_t j) {
    const auto closer = closer_set(q, x_cur, j);
    if (closer.empty()) return std::nullopt;
    const std::size_t m = model_->num_actions(x_cur);
    auto best_action = [&](MdpState y) {
        ActionId best = 0;
        double p = -1.0;
        for (std::size_t a = 0; a < m; ++a) {
            const double v = model_->prob(x_cur, static_cast<ActionId>(a), y);
            if (v > p) {
                p = v;
                best = static_cast<ActionId>(a);
            }
        }
        return std::pair{best, p};
    };
    MdpState target = closer.front();
    if (options_.selection == CloserSelection::uniform) {
        target = closer[rng.below(closer.size())];
    } else {
        double top = -1.0;
        for (MdpState y : closer) {
            const double p = best_action(y).second;
            if (p > top) {
                top = p;
                target = y;
            }
        }
    }
    return BiasedChoice{best_action(target).first, target};
}

std::optional<ActionId> BiasContext::biased_product_action(ProductState s, Rng& rng, std::size_t j) {
    const auto& g = goal_sets(s.q, j);
    if (!g.epsilon_actions.empty())
        return static_cast<ActionId>(space_->mdp().num_actions(s.x)) + g.epsilon_actions.front();
    if (auto c = biased_action(s.q, s.x, rng, j)) return c->action;
    return std::nullopt;
}

ActionId select_action(PolicyKind kind, const QTable& table, BiasContext* bias, const ProductSpace& space,
                       ProductState s, const ExplorationParams& p, Rng& rng, std::size_t target_set) {
    const std::size_t m = space.num_actions(s);
    if (m == 0) throw std::invalid_argument("no action available at a deadlock state");
    const std::size_t idx = space.index(s);
    switch (kind) {
    case PolicyKind::eps_greedy:
    case PolicyKind::eps_delta_greedy: {
        const double u = rng.uniform();
        if (u < 1.0 - p.epsilon) return table.greedy(idx, m);
        if (kind == PolicyKind::eps_delta_greedy && u < 1.0 - p.epsilon + p.delta_b) {
            if (!bias) throw std::invalid_argument("biased exploration needs a bias context");
            if (auto a = bias->biased_product_action(s, rng, target_set)) return *a;
        }
        return static_cast<ActionId>(rng.below(m));
    }
    case PolicyKind::boltzmann: {
        if (p.temperature <= 0.0) return table.greedy(idx, m);
        const double top = table.max_value(idx, m);
        double w[64];
        std::vector<double> big;
        double* weights = w;
        if (m > 64) {
            big.resize(m);
            weights = big.data();
        }
        double z = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            z += weights[a] = std::exp((table.value(idx, static_cast<ActionId>(a)) - top) / p.temperature);
        double u = rng.uniform() * z;
        for (std::size_t a = 0; a < m; ++a) {
            u -= weights[a];
            if (u < 0.0) return static_cast<ActionId>(a);
        }
        return static_cast<ActionId>(m - 1);
    }
    case PolicyKind::ucb1: {
        for (std::size_t a = 0; a < m; ++a)
            if (table.count(idx, static_cast<ActionId>(a)) == 0) return static_cast<ActionId>(a);
        const double log_n = std::log(static_cast<double>(table.state_count(idx)));
        std::size_t best = 0;
        double best_v = -kInfinity;
        for (std::size_t a = 0; a < m; ++a) {
            const auto n = static_cast<double>(table.count(idx, static_cast<ActionId>(a)));
            const double v = table.value(idx, static_cast<ActionId>(a)) + p.ucb_c * std::sqrt(2.0 * log_n / n);
            if (v > best_v) {
                best_v = v;
                best = a;
            }
        }
        return static_cast<ActionId>(best);
    }
    }
    throw std::logic_error("unhandled policy kind");
}

} // namespace ltlrl
