#pragma once

#include "ltlrl/automaton.hpp"

#include <stdexcept>
#include <variant>
#include <vector>

namespace ltlrl {

class PatternError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reach `goal`, stay there forever, never touch an obstacle.
struct ReachAvoidStay {
    PropId goal = 0;
    std::vector<PropId> obstacles;
};

/// `then` may not be visited before `first` has been.
struct Precedence {
    PropId first = 0;
    PropId then = 0;
};

/// Visit every target at least once, respecting the precedences, never touch
/// an obstacle.
struct OrderedCoverage {
    std::vector<PropId> targets;
    std::vector<Precedence> precedences;
    std::vector<PropId> obstacles;
};

/// Visit every target infinitely often, never touch an obstacle.
struct Surveillance {
    std::vector<PropId> targets;
    std::vector<PropId> obstacles;
};

using TaskPattern = std::variant<ReachAvoidStay, OrderedCoverage, Surveillance>;

/// Reach-avoid-stay: 4 states (init, at goal, left goal, trap), one pair.
/// Ordered coverage: one state per reachable set of visited targets plus an
/// obstacle trap and, when precedences exist, an order-violation trap.
/// Surveillance over n targets: 2n+2 states (init, per target a "just
/// visited" and a "waiting" state, trap); targets are cycled round-robin.
RabinAutomaton build_pattern_automaton(const TaskPattern& pattern);

/// Generalized Büchi form of a surveillance task: one accepting set per
/// target, an initial nondeterministic state with an epsilon jump into the
/// deterministic part.
LimitDetBuchi build_pattern_ldba(const Surveillance& pattern);

namespace reference_tasks {

ReachAvoidStay reach_avoid_1();
ReachAvoidStay reach_avoid_2();
OrderedCoverage coverage();
Surveillance surveillance();

} // namespace reference_tasks

} // namespace ltlrl
