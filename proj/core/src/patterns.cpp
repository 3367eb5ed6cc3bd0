#include "ltlrl/patterns.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

namespace ltlrl {

namespace {

std::vector<PropId> sorted_unique(std::vector<PropId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Guard any_of(const std::vector<PropId>& props) {
    Guard g = Guard::never();
    for (PropId p : props) g = g || Guard::prop(p);
    return g;
}

void check_targets(const std::vector<PropId>& targets, const std::vector<PropId>& obstacles) {
    if (targets.empty()) throw PatternError("task pattern has no targets");
    if (sorted_unique(targets).size() != targets.size()) throw PatternError("duplicate target");
    for (PropId t : targets)
        if (std::find(obstacles.begin(), obstacles.end(), t) != obstacles.end())
            throw PatternError("target p" + std::to_string(t) + " is also an obstacle");
}

// Guards for "obstacle", "target i (first matching in list order)" and
// "nothing relevant"; together they partition 2^AP.
struct Partition {
    Guard obstacle;
    std::vector<Guard> target;
    Guard neutral;
};

Partition partition(const std::vector<PropId>& targets, const std::vector<PropId>& obstacles) {
    Partition p;
    p.obstacle = any_of(obstacles);
    Guard earlier = p.obstacle;
    for (PropId t : targets) {
        p.target.push_back(Guard::prop(t) && !earlier);
        earlier = earlier || Guard::prop(t);
    }
    p.neutral = !earlier;
    return p;
}

RabinAutomaton build(const ReachAvoidStay& task) {
    check_targets({task.goal}, task.obstacles);
    auto aps = sorted_unique(task.obstacles);
    aps.insert(std::upper_bound(aps.begin(), aps.end(), task.goal), task.goal);
    const auto part = partition({task.goal}, task.obstacles);

    enum : AutState { init = 0, at_goal = 1, left_goal = 2, trap = 3 };
    TransitionStructure s(4, aps);
    for (AutState q : {init, at_goal, left_goal}) {
        s.add_edge(q, part.obstacle, trap);
        s.add_edge(q, part.target[0], at_goal);
        s.add_edge(q, part.neutral, q == init ? init : left_goal);
    }
    s.add_edge(trap, Guard::always(), trap);
    return RabinAutomaton(std::move(s), init, {RabinPair{{at_goal}, {init, left_goal, trap}}},
                          {"init", "at_goal", "left_goal", "trap"});
}

RabinAutomaton build(const OrderedCoverage& task) {
    check_targets(task.targets, task.obstacles);
    const std::size_t n = task.targets.size();
    if (n > 20) throw PatternError("too many coverage targets");
    auto index_of = [&](PropId p) -> std::size_t {
        auto it = std::find(task.targets.begin(), task.targets.end(), p);
        if (it == task.targets.end())
            throw PatternError("precedence mentions p" + std::to_string(p) + ", which is not a target");
        return static_cast<std::size_t>(it - task.targets.begin());
    };
    std::vector<std::uint32_t> prerequisites(n, 0);
    for (const auto& pr : task.precedences) {
        const auto a = index_of(pr.first);
        const auto b = index_of(pr.then);
        if (a == b) throw PatternError("a target cannot precede itself");
        prerequisites[b] |= 1u << a;
    }

    // Reachable visited-sets, numbered in BFS order from the empty set.
    std::map<std::uint32_t, AutState> id;
    std::vector<std::uint32_t> order;
    std::queue<std::uint32_t> frontier;
    id[0] = 0;
    order.push_back(0);
    frontier.push(0);
    while (!frontier.empty()) {
        auto mask = frontier.front();
        frontier.pop();
        for (std::size_t i = 0; i < n; ++i) {
            if ((prerequisites[i] & mask) != prerequisites[i]) continue;
            auto next = mask | (1u << i);
            if (id.emplace(next, static_cast<AutState>(order.size())).second) {
                order.push_back(next);
                frontier.push(next);
            }
        }
    }
    const auto trap_obstacle = static_cast<AutState>(order.size());
    const bool has_order_trap = !task.precedences.empty();
    const auto trap_order = static_cast<AutState>(order.size() + 1);
    const std::size_t total = order.size() + (has_order_trap ? 2 : 1);

    auto aps = sorted_unique([&] {
        auto v = task.targets;
        v.insert(v.end(), task.obstacles.begin(), task.obstacles.end());
        return v;
    }());
    const auto part = partition(task.targets, task.obstacles);
    TransitionStructure s(total, aps);
    std::vector<std::string> names;
    const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
    AutState accepting = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto q = static_cast<AutState>(k);
        const auto mask = order[k];
        if (mask == full) accepting = q;
        std::string name = "visited{";
        for (std::size_t i = 0, c = 0; i < n; ++i)
            if (mask & (1u << i)) name += (c++ ? "," : "") + ("p" + std::to_string(task.targets[i]));
        names.push_back(name + "}");

        s.add_edge(q, part.obstacle, trap_obstacle);
        for (std::size_t i = 0; i < n; ++i) {
            const bool allowed = (prerequisites[i] & mask) == prerequisites[i];
            s.add_edge(q, part.target[i], allowed ? id.at(mask | (1u << i)) : trap_order);
        }
        s.add_edge(q, part.neutral, q);
    }
    s.add_edge(trap_obstacle, Guard::always(), trap_obstacle);
    names.emplace_back("trap_obstacle");
    if (has_order_trap) {
        s.add_edge(trap_order, Guard::always(), trap_order);
        names.emplace_back("trap_order");
    }
    std::vector<AutState> bad;
    for (std::size_t q = 0; q < total; ++q)
        if (static_cast<AutState>(q) != accepting) bad.push_back(static_cast<AutState>(q));
    return RabinAutomaton(std::move(s), 0, {RabinPair{{accepting}, bad}}, std::move(names));
}

RabinAutomaton build(const Surveillance& task) {
    check_targets(task.targets, task.obstacles);
    const std::size_t n = task.targets.size();
    auto aps = sorted_unique([&] {
        auto v = task.targets;
        v.insert(v.end(), task.obstacles.begin(), task.obstacles.end());
        return v;
    }());
    const auto part = partition(task.targets, task.obstacles);
    const AutState init = 0;
    auto at = [](std::size_t i) { return static_cast<AutState>(2 * i + 1); };
    auto after = [](std::size_t i) { return static_cast<AutState>(2 * i + 2); };
    const auto trap = static_cast<AutState>(2 * n + 1);

    TransitionStructure s(2 * n + 2, aps);
    std::vector<std::string> names{"init"};
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back("at_p" + std::to_string(task.targets[i]));
        names.push_back("after_p" + std::to_string(task.targets[i]));
    }
    names.emplace_back("trap");

    // waiting for target `next`; reading anything else goes to `idle`
    auto wire = [&](AutState q, std::size_t next, AutState idle) {
        s.add_edge(q, part.obstacle, trap);
        for (std::size_t i = 0; i < n; ++i) s.add_edge(q, part.target[i], i == next ? at(i) : idle);
        s.add_edge(q, part.neutral, idle);
    };
    wire(init, 0, init);
    for (std::size_t i = 0; i < n; ++i) {
        wire(at(i), (i + 1) % n, after(i));
        wire(after(i), (i + 1) % n, after(i));
    }
    s.add_edge(trap, Guard::always(), trap);
    return RabinAutomaton(std::move(s), init, {RabinPair{{at(n - 1)}, {init, trap}}}, std::move(names));
}

} // namespace

RabinAutomaton build_pattern_automaton(const TaskPattern& pattern) {
    return std::visit([](const auto& task) { return build(task); }, pattern);
}

LimitDetBuchi build_pattern_ldba(const Surveillance& task) {
    check_targets(task.targets, task.obstacles);
    const std::size_t n = task.targets.size();
    auto aps = sorted_unique([&] {
        auto v = task.targets;
        v.insert(v.end(), task.obstacles.begin(), task.obstacles.end());
        return v;
    }());
    const auto part = partition(task.targets, task.obstacles);
    // 0: initial (nondeterministic part), 1: deterministic hub, 2+i: just
    // visited target i, 2+n: trap.
    const AutState start = 0;
    const AutState hub = 1;
    const auto trap = static_cast<AutState>(n + 2);
    TransitionStructure s(n + 3, aps);
    s.add_edge(start, part.obstacle, trap);
    s.add_edge(start, !part.obstacle, start);
    s.add_epsilon(start, hub);
    std::vector<std::string> names{"wait", "hub"};
    std::vector<std::vector<AutState>> sets;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back("seen_p" + std::to_string(task.targets[i]));
        sets.push_back({static_cast<AutState>(i + 2)});
    }
    names.emplace_back("trap");
    for (AutState q = hub; q < trap; ++q) {
        s.add_edge(q, part.obstacle, trap);
        for (std::size_t i = 0; i < n; ++i) s.add_edge(q, part.target[i], static_cast<AutState>(i + 2));
        s.add_edge(q, part.neutral, hub);
    }
    s.add_edge(trap, Guard::always(), trap);
    std::vector<bool> det(n + 3, true);
    det[start] = false;
    return LimitDetBuchi(std::move(s), start, std::move(det), std::move(sets), std::move(names));
}

namespace reference_tasks {

ReachAvoidStay reach_avoid_1() { return {100, {46}}; }

ReachAvoidStay reach_avoid_2() {
    std::vector<PropId> walls;
    for (PropId c = 21; c <= 27; ++c) walls.push_back(c);
    for (PropId c = 54; c <= 60; ++c) walls.push_back(c);
    for (PropId c = 86; c <= 88; ++c) walls.push_back(c);
    return {100, walls};
}

OrderedCoverage coverage() { return {{100, 46, 33}, {{33, 100}}, {73}}; }

Surveillance surveillance() { return {{36, 26, 76, 64, 89, 10}, {33}}; }

} // namespace reference_tasks

} // namespace ltlrl
