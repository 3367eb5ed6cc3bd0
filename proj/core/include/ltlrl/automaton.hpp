#pragma once

#include "ltlrl/guard.hpp"
#include "ltlrl/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltlrl {

/// Raised when a task automaton is malformed (bad indices, determinism
/// violations, partition violations).
class AutomatonError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when no accepting state is reachable from the initial state in the
/// pruned automaton, i.e. the task cannot be satisfied by a single robot.
class UnsatisfiableTask : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GuardedEdge {
    Guard guard;
    AutState target = 0;
};

using Adjacency = std::vector<std::vector<AutState>>;

/// Guarded transition graph shared by Rabin and limit-deterministic automata.
/// Epsilon edges consume no input symbol.
class TransitionStructure {
public:
    TransitionStructure() = default;
    TransitionStructure(std::size_t num_states, std::vector<PropId> aps);

    void add_edge(AutState from, Guard guard, AutState to);
    void add_epsilon(AutState from, AutState to);

    [[nodiscard]] std::size_t size() const { return edges_.size(); }
    [[nodiscard]] const std::vector<PropId>& aps() const { return aps_; }
    [[nodiscard]] const std::vector<GuardedEdge>& edges(AutState q) const { return edges_.at(q); }
    [[nodiscard]] const std::vector<AutState>& epsilon(AutState q) const { return epsilon_.at(q); }
    [[nodiscard]] bool has_epsilon() const;

    /// Distinct targets of guarded edges at q whose guard holds on sigma.
    [[nodiscard]] std::vector<AutState> successors(AutState q, const Symbol& sigma) const;

private:
    std::vector<PropId> aps_;
    std::vector<std::vector<GuardedEdge>> edges_;
    std::vector<std::vector<AutState>> epsilon_;
};

/// The symbols a single robot can generate: the empty symbol followed by each
/// singleton over `aps` (in the given order).
std::vector<Symbol> feasible_symbols(std::span<const PropId> aps);

/// Successor lists restricted to transitions enabled by at least one feasible
/// symbol. Epsilon edges are always kept. Lists are sorted and duplicate-free.
Adjacency prune(const TransitionStructure& structure);

/// Shortest hop count from every state to the nearest target over `graph`,
/// kUnreachable when no path exists. Multi-source BFS on the reversed graph.
std::vector<int> hop_distances(const Adjacency& graph, std::span<const AutState> targets);

struct RabinPair {
    std::vector<AutState> good;  // G_i: must be visited infinitely often
    std::vector<AutState> bad;   // B_i: must be visited finitely often
};

/// Deterministic Rabin automaton. Immutable after construction; the pruned
/// graph and the distance-to-acceptance table are computed eagerly.
class RabinAutomaton {
public:
    /// Validates indices and determinism: at every state each feasible symbol
    /// enables exactly one successor. Epsilon edges are rejected.
    RabinAutomaton(TransitionStructure structure, AutState initial, std::vector<RabinPair> pairs,
                   std::vector<std::string> state_names = {});

    [[nodiscard]] std::size_t size() const { return structure_.size(); }
    [[nodiscard]] AutState initial() const { return initial_; }
    [[nodiscard]] const TransitionStructure& structure() const { return structure_; }
    [[nodiscard]] const std::vector<PropId>& aps() const { return structure_.aps(); }
    [[nodiscard]] const std::vector<RabinPair>& pairs() const { return pairs_; }
    [[nodiscard]] const std::vector<std::string>& state_names() const { return names_; }
    [[nodiscard]] std::string state_name(AutState q) const;

    /// The unique successor of q under sigma. Throws std::logic_error when no
    /// guard (or more than one target) matches.
    [[nodiscard]] AutState step(AutState q, const Symbol& sigma) const;

    [[nodiscard]] const Adjacency& pruned() const { return pruned_; }
    /// d_F(q, F): hops to the nearest state of any G_i; kUnreachable if none.
    [[nodiscard]] int distance(AutState q) const { return distances_.at(q); }
    [[nodiscard]] const std::vector<int>& distances() const { return distances_; }
    [[nodiscard]] bool satisfiable() const { return distances_.at(initial_) != kUnreachable; }

    [[nodiscard]] bool in_good(AutState q) const { return good_any_.at(q); }
    [[nodiscard]] bool in_bad(AutState q) const { return bad_any_.at(q); }
    [[nodiscard]] bool in_good(std::size_t pair, AutState q) const;
    [[nodiscard]] bool in_bad(std::size_t pair, AutState q) const;
    [[nodiscard]] std::vector<AutState> accepting_states() const;

private:
    TransitionStructure structure_;
    AutState initial_;
    std::vector<RabinPair> pairs_;
    std::vector<std::string> names_;
    std::vector<char> good_any_;
    std::vector<char> bad_any_;
    Adjacency pruned_;
    std::vector<int> distances_;
};

/// Recomputes d_F(q, F) for every state from the pruned graph.
std::vector<int> distance_table(const RabinAutomaton& automaton);

/// Throws UnsatisfiableTask when d_F(q_0, F) is infinite.
void require_satisfiable(const RabinAutomaton& automaton);

/// Limit-deterministic (generalized) Büchi automaton. States are split into a
/// nondeterministic initial part and a deterministic part that is closed under
/// transitions and contains every accepting set; epsilon edges lead from the
/// first part into the second.
class LimitDetBuchi {
public:
    LimitDetBuchi(TransitionStructure structure, AutState initial, std::vector<bool> deterministic_part,
                  std::vector<std::vector<AutState>> accepting_sets, std::vector<std::string> state_names = {});

    /// Infers the deterministic part as the closure of the accepting states and
    /// epsilon targets under guarded transitions.
    static LimitDetBuchi with_inferred_partition(TransitionStructure structure, AutState initial,
                                                 std::vector<std::vector<AutState>> accepting_sets,
                                                 std::vector<std::string> state_names = {});

    [[nodiscard]] std::size_t size() const { return structure_.size(); }
    [[nodiscard]] AutState initial() const { return initial_; }
    [[nodiscard]] const TransitionStructure& structure() const { return structure_; }
    [[nodiscard]] const std::vector<PropId>& aps() const { return structure_.aps(); }
    [[nodiscard]] const std::vector<std::string>& state_names() const { return names_; }
    [[nodiscard]] std::string state_name(AutState q) const;
    [[nodiscard]] bool in_deterministic_part(AutState q) const { return deterministic_.at(q); }

    [[nodiscard]] std::size_t num_sets() const { return sets_.size(); }
    [[nodiscard]] const std::vector<AutState>& accepting_set(std::size_t j) const { return sets_.at(j); }
    [[nodiscard]] bool in_set(std::size_t j, AutState q) const;
    /// Indices of the accepting sets containing q.
    [[nodiscard]] std::vector<std::size_t> sets_containing(AutState q) const;

    /// Guarded successors of q under sigma, plus epsilon successors when q lies
    /// in the nondeterministic part.
    [[nodiscard]] std::vector<AutState> step(AutState q, const Symbol& sigma) const;

    /// The unique guarded successor; throws std::logic_error when there is not
    /// exactly one.
    [[nodiscard]] AutState unique_successor(AutState q, const Symbol& sigma) const;

    /// True when every state has exactly one guarded successor per feasible
    /// symbol, so that nondeterminism is confined to epsilon edges.
    [[nodiscard]] bool epsilon_only_nondeterminism() const;

    [[nodiscard]] const Adjacency& pruned() const { return pruned_; }
    [[nodiscard]] int distance(std::size_t j, AutState q) const { return distances_.at(j).at(q); }
    [[nodiscard]] const std::vector<int>& distances(std::size_t j) const { return distances_.at(j); }
    [[nodiscard]] bool satisfiable() const;

private:
    TransitionStructure structure_;
    AutState initial_;
    std::vector<bool> deterministic_;
    std::vector<std::vector<AutState>> sets_;
    std::vector<std::string> names_;
    Adjacency pruned_;
    std::vector<std::vector<int>> distances_;
};

/// d_F(q, F_j) over the pruned graph; epsilon edges count as one hop.
std::vector<int> ldba_distance_table(const LimitDetBuchi& automaton, std::size_t j);

/// Debug dumps: states, guarded edges, acceptance, pruned graph, distances.
nlohmann::json to_json(const RabinAutomaton& automaton);
nlohmann::json to_json(const LimitDetBuchi& automaton);

} // namespace ltlrl
