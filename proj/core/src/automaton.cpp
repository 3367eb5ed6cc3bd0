#include "ltlrl/automaton.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>

namespace ltlrl {

namespace {

void check_state(AutState q, std::size_t n, const char* what) {
    if (q < 0 || static_cast<std::size_t>(q) >= n)
        throw AutomatonError(std::string(what) + " refers to state " + std::to_string(q) + " outside 0.." +
                             std::to_string(n ? n - 1 : 0));
}

std::vector<AutState> sorted_unique(std::vector<AutState> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

nlohmann::json distances_json(const std::vector<int>& d) {
    auto out = nlohmann::json::array();
    for (int v : d) out.push_back(v == kUnreachable ? nlohmann::json(nullptr) : nlohmann::json(v));
    return out;
}

nlohmann::json structure_json(const TransitionStructure& s) {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t q = 0; q < s.size(); ++q) {
        for (const auto& e : s.edges(static_cast<AutState>(q)))
            edges.push_back({{"from", q}, {"to", e.target}, {"guard", to_string(e.guard)}});
        for (AutState t : s.epsilon(static_cast<AutState>(q)))
            edges.push_back({{"from", q}, {"to", t}, {"guard", "epsilon"}});
    }
    return edges;
}

} // namespace

// ---------------------------------------------------------------------------
// TransitionStructure

TransitionStructure::TransitionStructure(std::size_t num_states, std::vector<PropId> aps)
    : aps_(std::move(aps)), edges_(num_states), epsilon_(num_states) {
    auto sorted = aps_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw AutomatonError("duplicate atomic proposition");
}

void TransitionStructure::add_edge(AutState from, Guard guard, AutState to) {
    check_state(from, size(), "edge source");
    check_state(to, size(), "edge target");
    for (PropId p : guard.props()) {
        if (std::find(aps_.begin(), aps_.end(), p) == aps_.end())
            throw AutomatonError("guard uses proposition p" + std::to_string(p) + " outside the alphabet");
    }
    if (guard.is_false()) return;
    edges_[from].push_back(GuardedEdge{std::move(guard), to});
}

void TransitionStructure::add_epsilon(AutState from, AutState to) {
    check_state(from, size(), "epsilon source");
    check_state(to, size(), "epsilon target");
    auto& list = epsilon_[from];
    if (std::find(list.begin(), list.end(), to) == list.end()) list.push_back(to);
}

bool TransitionStructure::has_epsilon() const {
    return std::any_of(epsilon_.begin(), epsilon_.end(), [](const auto& l) { return !l.empty(); });
}

std::vector<AutState> TransitionStructure::successors(AutState q, const Symbol& sigma) const {
    std::vector<AutState> out;
    for (const auto& e : edges_.at(q)) {
        if (e.guard.eval(sigma) && std::find(out.begin(), out.end(), e.target) == out.end())
            out.push_back(e.target);
    }
    return out;
}

std::vector<Symbol> feasible_symbols(std::span<const PropId> aps) {
    std::vector<Symbol> out;
    out.reserve(aps.size() + 1);
    out.emplace_back();
    for (PropId p : aps) out.push_back(Symbol::single(p));
    return out;
}

Adjacency prune(const TransitionStructure& structure) {
    Adjacency out(structure.size());
    for (std::size_t q = 0; q < structure.size(); ++q) {
        auto& succ = out[q];
        for (const auto& e : structure.edges(static_cast<AutState>(q)))
            if (e.guard.feasibly_satisfiable()) succ.push_back(e.target);
        const auto& eps = structure.epsilon(static_cast<AutState>(q));
        succ.insert(succ.end(), eps.begin(), eps.end());
        succ = sorted_unique(std::move(succ));
    }
    return out;
}

std::vector<int> hop_distances(const Adjacency& graph, std::span<const AutState> targets) {
    const std::size_t n = graph.size();
    Adjacency reverse(n);
    for (std::size_t q = 0; q < n; ++q)
        for (AutState t : graph[q]) reverse.at(t).push_back(static_cast<AutState>(q));

    std::vector<int> dist(n, kUnreachable);
    std::deque<AutState> frontier;
    for (AutState t : targets) {
        if (dist.at(t) != 0) {
            dist[t] = 0;
            frontier.push_back(t);
        }
    }
    while (!frontier.empty()) {
        AutState q = frontier.front();
        frontier.pop_front();
        for (AutState p : reverse[q]) {
            if (dist[p] == kUnreachable) {
                dist[p] = dist[q] + 1;
                frontier.push_back(p);
            }
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// RabinAutomaton

RabinAutomaton::RabinAutomaton(TransitionStructure structure, AutState initial, std::vector<RabinPair> pairs,
                               std::vector<std::string> state_names)
    : structure_(std::move(structure)), initial_(initial), pairs_(std::move(pairs)), names_(std::move(state_names)) {
    const std::size_t n = structure_.size();
    if (n == 0) throw AutomatonError("automaton has no states");
    check_state(initial_, n, "initial state");
    if (structure_.has_epsilon()) throw AutomatonError("Rabin automaton cannot have epsilon transitions");
    if (!names_.empty() && names_.size() != n) throw AutomatonError("state name count does not match state count");

    good_any_.assign(n, 0);
    bad_any_.assign(n, 0);
    for (auto& pair : pairs_) {
        pair.good = sorted_unique(std::move(pair.good));
        pair.bad = sorted_unique(std::move(pair.bad));
        for (AutState q : pair.good) {
            check_state(q, n, "accepting pair");
            good_any_[q] = 1;
        }
        for (AutState q : pair.bad) {
            check_state(q, n, "accepting pair");
            bad_any_[q] = 1;
        }
    }

    const auto symbols = feasible_symbols(structure_.aps());
    for (std::size_t q = 0; q < n; ++q) {
        for (const auto& sigma : symbols) {
            auto succ = structure_.successors(static_cast<AutState>(q), sigma);
            if (succ.empty())
                throw AutomatonError("state " + std::to_string(q) + " has no transition for symbol " +
                                     to_string(sigma));
            if (succ.size() > 1)
                throw AutomatonError("state " + std::to_string(q) + " is nondeterministic on symbol " +
                                     to_string(sigma));
        }
    }

    pruned_ = prune(structure_);
    distances_ = hop_distances(pruned_, accepting_states());
}

std::string RabinAutomaton::state_name(AutState q) const {
    return names_.empty() ? "q" + std::to_string(q) : names_.at(q);
}

AutState RabinAutomaton::step(AutState q, const Symbol& sigma) const {
    auto succ = structure_.successors(q, sigma);
    if (succ.size() != 1)
        throw std::logic_error("Rabin automaton state " + std::to_string(q) + " has " +
                               std::to_string(succ.size()) + " successors on " + to_string(sigma));
    return succ.front();
}

bool RabinAutomaton::in_good(std::size_t pair, AutState q) const {
    const auto& g = pairs_.at(pair).good;
    return std::binary_search(g.begin(), g.end(), q);
}

bool RabinAutomaton::in_bad(std::size_t pair, AutState q) const {
    const auto& b = pairs_.at(pair).bad;
    return std::binary_search(b.begin(), b.end(), q);
}

std::vector<AutState> RabinAutomaton::accepting_states() const {
    std::vector<AutState> out;
    for (std::size_t q = 0; q < good_any_.size(); ++q)
        if (good_any_[q]) out.push_back(static_cast<AutState>(q));
    return out;
}

std::vector<int> distance_table(const RabinAutomaton& automaton) {
    return hop_distances(prune(automaton.structure()), automaton.accepting_states());
}

void require_satisfiable(const RabinAutomaton& automaton) {
    if (!automaton.satisfiable())
        throw UnsatisfiableTask("no accepting state is reachable from the initial automaton state "
                                "through feasible transitions");
}

// ---------------------------------------------------------------------------
// LimitDetBuchi

LimitDetBuchi::LimitDetBuchi(TransitionStructure structure, AutState initial, std::vector<bool> deterministic_part,
                             std::vector<std::vector<AutState>> accepting_sets, std::vector<std::string> state_names)
    : structure_(std::move(structure)),
      initial_(initial),
      deterministic_(std::move(deterministic_part)),
      sets_(std::move(accepting_sets)),
      names_(std::move(state_names)) {
    const std::size_t n = structure_.size();
    if (n == 0) throw AutomatonError("automaton has no states");
    check_state(initial_, n, "initial state");
    if (deterministic_.size() != n) throw AutomatonError("partition size does not match state count");
    if (!names_.empty() && names_.size() != n) throw AutomatonError("state name count does not match state count");
    if (sets_.empty()) throw AutomatonError("limit-deterministic automaton needs at least one accepting set");

    for (auto& set : sets_) {
        set = sorted_unique(std::move(set));
        for (AutState q : set) {
            check_state(q, n, "accepting set");
            if (!deterministic_[q])
                throw AutomatonError("accepting state " + std::to_string(q) + " lies outside the deterministic part");
        }
    }

    const auto symbols = feasible_symbols(structure_.aps());
    for (std::size_t q = 0; q < n; ++q) {
        const auto qs = static_cast<AutState>(q);
        if (!deterministic_[q]) {
            for (AutState t : structure_.epsilon(qs))
                if (!deterministic_[t])
                    throw AutomatonError("epsilon transition " + std::to_string(q) + " -> " + std::to_string(t) +
                                         " does not enter the deterministic part");
            continue;
        }
        if (!structure_.epsilon(qs).empty())
            throw AutomatonError("epsilon transition leaves deterministic state " + std::to_string(q));
        for (const auto& sigma : symbols) {
            auto succ = structure_.successors(qs, sigma);
            if (succ.size() != 1)
                throw AutomatonError("deterministic state " + std::to_string(q) + " has " +
                                     std::to_string(succ.size()) + " successors on " + to_string(sigma));
            if (!deterministic_[succ.front()])
                throw AutomatonError("transition from deterministic state " + std::to_string(q) +
                                     " leaves the deterministic part");
        }
    }

    pruned_ = prune(structure_);
    for (const auto& set : sets_) distances_.push_back(hop_distances(pruned_, set));
}

LimitDetBuchi LimitDetBuchi::with_inferred_partition(TransitionStructure structure, AutState initial,
                                                     std::vector<std::vector<AutState>> accepting_sets,
                                                     std::vector<std::string> state_names) {
    const std::size_t n = structure.size();
    std::vector<bool> det(n, false);
    std::deque<AutState> work;
    auto mark = [&](AutState q) {
        check_state(q, n, "accepting set");
        if (!det[q]) {
            det[q] = true;
            work.push_back(q);
        }
    };
    for (const auto& set : accepting_sets)
        for (AutState q : set) mark(q);
    for (std::size_t q = 0; q < n; ++q)
        for (AutState t : structure.epsilon(static_cast<AutState>(q))) mark(t);
    const auto symbols = feasible_symbols(structure.aps());
    while (!work.empty()) {
        AutState q = work.front();
        work.pop_front();
        for (const auto& sigma : symbols)
            for (AutState t : structure.successors(q, sigma)) mark(t);
    }
    return LimitDetBuchi(std::move(structure), initial, std::move(det), std::move(accepting_sets),
                         std::move(state_names));
}

std::string LimitDetBuchi::state_name(AutState q) const {
    return names_.empty() ? "q" + std::to_string(q) : names_.at(q);
}

bool LimitDetBuchi::in_set(std::size_t j, AutState q) const {
    const auto& s = sets_.at(j);
    return std::binary_search(s.begin(), s.end(), q);
}

std::vector<std::size_t> LimitDetBuchi::sets_containing(AutState q) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < sets_.size(); ++j)
        if (in_set(j, q)) out.push_back(j);
    return out;
}

std::vector<AutState> LimitDetBuchi::step(AutState q, const Symbol& sigma) const {
    auto out = structure_.successors(q, sigma);
    if (!deterministic_.at(q)) {
        for (AutState t : structure_.epsilon(q))
            if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
}

AutState LimitDetBuchi::unique_successor(AutState q, const Symbol& sigma) const {
    auto succ = structure_.successors(q, sigma);
    if (succ.size() != 1)
        throw std::logic_error("automaton state " + std::to_string(q) + " has " + std::to_string(succ.size()) +
                               " guarded successors on " + to_string(sigma));
    return succ.front();
}

bool LimitDetBuchi::epsilon_only_nondeterminism() const {
    const auto symbols = feasible_symbols(structure_.aps());
    for (std::size_t q = 0; q < size(); ++q)
        for (const auto& sigma : symbols)
            if (structure_.successors(static_cast<AutState>(q), sigma).size() != 1) return false;
    return true;
}

bool LimitDetBuchi::satisfiable() const {
    return std::all_of(distances_.begin(), distances_.end(),
                       [&](const std::vector<int>& d) { return d.at(initial_) != kUnreachable; });
}

std::vector<int> ldba_distance_table(const LimitDetBuchi& automaton, std::size_t j) {
    return hop_distances(prune(automaton.structure()), automaton.accepting_set(j));
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const RabinAutomaton& a) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : a.pairs()) pairs.push_back({{"G", p.good}, {"B", p.bad}});
    nlohmann::json names = nlohmann::json::array();
    for (std::size_t q = 0; q < a.size(); ++q) names.push_back(a.state_name(static_cast<AutState>(q)));
    return {{"kind", "rabin"},
            {"states", a.size()},
            {"state_names", names},
            {"initial", a.initial()},
            {"aps", a.aps()},
            {"edges", structure_json(a.structure())},
            {"pairs", pairs},
            {"pruned", a.pruned()},
            {"distances", distances_json(a.distances())},
            {"satisfiable", a.satisfiable()}};
}

nlohmann::json to_json(const LimitDetBuchi& a) {
    nlohmann::json names = nlohmann::json::array();
    std::vector<AutState> det;
    for (std::size_t q = 0; q < a.size(); ++q) {
        names.push_back(a.state_name(static_cast<AutState>(q)));
        if (a.in_deterministic_part(static_cast<AutState>(q))) det.push_back(static_cast<AutState>(q));
    }
    nlohmann::json sets = nlohmann::json::array();
    nlohmann::json dists = nlohmann::json::array();
    for (std::size_t j = 0; j < a.num_sets(); ++j) {
        sets.push_back(a.accepting_set(j));
        dists.push_back(distances_json(a.distances(j)));
    }
    return {{"kind", "ldba"},
            {"states", a.size()},
            {"state_names", names},
            {"initial", a.initial()},
            {"aps", a.aps()},
            {"deterministic_part", det},
            {"edges", structure_json(a.structure())},
            {"accepting_sets", sets},
            {"pruned", a.pruned()},
            {"distances", dists},
            {"satisfiable", a.satisfiable()}};
}

} // namespace ltlrl
