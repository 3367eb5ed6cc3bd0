#include "ltlrl/oracle.hpp"
#include "ltlrl/patterns.hpp"
#include "ltlrl/policy.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <deque>
#include <numeric>

using namespace ltlrl;

namespace {

double chi_square_p(const std::vector<std::size_t>& observed, const std::vector<double>& expected_prob) {
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
    double stat = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected_prob[i] <= 0.0) {
            EXPECT_EQ(observed[i], 0u);
            continue;
        }
        const double e = n * expected_prob[i];
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++cells;
    }
    const boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// The hallway of the worked example: x_cur reaches x1 and x2, each two hops from an exit.
//   0 x_cur, 1 x1, 2 x2, 3 y1, 4 y2, 5 Exit1, 6 Exit2
LabeledMdp example_hallway() {
    KernelRows rows(7);
    rows[0] = {{{1, 0.6}, {2, 0.4}}, {{2, 0.9}, {1, 0.1}}};
    rows[1] = {{{3, 1.0}}, {{0, 1.0}}};
    rows[2] = {{{0, 1.0}}, {{4, 1.0}}};
    rows[3] = {{{5, 1.0}}, {{1, 1.0}}};
    rows[4] = {{{2, 1.0}}, {{6, 1.0}}};
    rows[5] = {{{5, 1.0}}, {{5, 1.0}}};
    rows[6] = {{{6, 1.0}}, {{6, 1.0}}};
    return LabeledMdp(0, rows, {Symbol{}, Symbol{}, Symbol{}, Symbol{}, Symbol{}, Symbol{1}, Symbol{2}});
}

RabinAutomaton eventually_exit() {
    TransitionStructure t(2, {1, 2});
    t.add_edge(0, Guard::not_prop(1) && Guard::not_prop(2), 0);
    t.add_edge(0, Guard::prop(1) || Guard::prop(2), 1);
    t.add_edge(1, Guard::always(), 1);
    return RabinAutomaton(std::move(t), 0, {{{1}, {}}});
}

struct ReferenceWorld {
    RabinAutomaton dra = build_pattern_automaton(reference_tasks::reach_avoid_1());
    LabeledMdp mdp = [this] {
        GridWorldSpec g;
        g.labeled_cells = dra.aps();
        return build_gridworld(g);
    }();
    ProductSpace space{mdp, dra};
};

} // namespace

TEST(Masses, SumToOneAndNonNegative) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = 1 + rng.below(9);
        const double eps = rng.uniform();
        const double db = eps * rng.uniform();
        const ExplorationParams p{eps, db, eps - db, 0, 0};
        const ActionId g = static_cast<ActionId>(rng.below(m));
        const std::optional<ActionId> b =
            rng.uniform() < 0.2 ? std::nullopt : std::optional<ActionId>(static_cast<ActionId>(rng.below(m)));
        const auto mass = exploration_masses(m, g, b, p);
        double sum = 0.0;
        for (double v : mass) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Masses, WorkedExample) {
    const auto mass = exploration_masses(5, 0, ActionId{1}, {0.4, 0.3, 0.1, 0, 0});
    EXPECT_NEAR(mass[0], 0.62, 1e-12);
    EXPECT_NEAR(mass[1], 0.32, 1e-12);
    for (int a = 2; a < 5; ++a) EXPECT_NEAR(mass[a], 0.02, 1e-12);
}

TEST(Masses, ZeroBiasIsEpsGreedy) {
    const auto a = exploration_masses(4, 2, ActionId{0}, {0.3, 0.0, 0.3, 0, 0});
    const auto b = exploration_masses(4, 2, std::nullopt, {0.3, 0.0, 0.3, 0, 0});
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Select, ZeroExplorationAlwaysGreedy) {
    ReferenceWorld w;
    TrueKernel truth(w.mdp);
    BiasContext bias(w.space, truth);
    QTable q(w.space.num_states(), w.space.max_actions());
    const ProductState s{cell_state(45), w.dra.initial()};
    const auto idx = w.space.index(s);
    for (ActionId a = 0; a < 5; ++a) q.update(idx, a, a == 3 ? 1.0 : 0.0);
    Rng rng(0);
    for (auto kind : {PolicyKind::eps_delta_greedy, PolicyKind::eps_greedy, PolicyKind::boltzmann, PolicyKind::ucb1})
        for (int i = 0; i < 200; ++i) EXPECT_EQ(select_action(kind, q, &bias, w.space, s, {}, rng), 3);
}

TEST(Select, FullExplorationIsUniform) {
    ReferenceWorld w;
    QTable q(w.space.num_states(), w.space.max_actions());
    const ProductState s{cell_state(45), w.dra.initial()};
    Rng rng(3);
    std::vector<std::size_t> hits(5, 0);
    for (int i = 0; i < 100000; ++i) ++hits[select_action(PolicyKind::eps_greedy, q, nullptr, w.space, s, {1.0, 0.0, 1.0, 0, 0}, rng)];
    for (auto h : hits) EXPECT_NEAR(h / 1e5, 0.2, 0.01);
}

TEST(Select, WorkedExampleEmpirical) {
    ReferenceWorld w;
    TrueKernel truth(w.mdp);
    BiasContext bias(w.space, truth);
    const ProductState s{cell_state(99), w.dra.initial()};
    Rng pick(0);
    const auto ab = bias.biased_product_action(s, pick);
    ASSERT_TRUE(ab.has_value());
    EXPECT_EQ(*ab, grid::right);
    QTable q(w.space.num_states(), w.space.max_actions());
    q.update(w.space.index(s), grid::left, 1.0);  // greedy differs from a_b
    const ExplorationParams p{0.4, 0.3, 0.1, 0, 0};
    const auto expected = exploration_masses(5, grid::left, ab, p);
    Rng rng(7);
    std::vector<std::size_t> hits(5, 0);
    for (int i = 0; i < 1000000; ++i) ++hits[select_action(PolicyKind::eps_delta_greedy, q, &bias, w.space, s, p, rng)];
    EXPECT_GT(chi_square_p(hits, expected), 0.01);
}

TEST(Select, ZeroBiasMatchesEpsGreedyDistribution) {
    ReferenceWorld w;
    TrueKernel truth(w.mdp);
    BiasContext bias(w.space, truth);
    const ProductState s{cell_state(99), w.dra.initial()};
    QTable q(w.space.num_states(), w.space.max_actions());
    q.update(w.space.index(s), grid::up, 1.0);
    const ExplorationParams p{0.5, 0.0, 0.5, 0, 0};
    Rng r1(11), r2(12);
    std::vector<std::size_t> a(5, 0), b(5, 0);
    for (int i = 0; i < 100000; ++i) {
        ++a[select_action(PolicyKind::eps_delta_greedy, q, &bias, w.space, s, p, r1)];
        ++b[select_action(PolicyKind::eps_greedy, q, nullptr, w.space, s, p, r2)];
    }
    // two-sample homogeneity test
    double stat = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double total = static_cast<double>(a[k] + b[k]);
        const double e = total / 2.0;
        stat += (a[k] - e) * (a[k] - e) / e + (b[k] - e) * (b[k] - e) / e;
    }
    const boost::math::chi_squared dist(4);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, stat)), 0.01);
    EXPECT_GT(chi_square_p(a, exploration_masses(5, grid::up, std::nullopt, p)), 0.01);
}

TEST(Boltzmann, Probabilities) {
    const auto p = boltzmann_probabilities({0.0, std::log(3.0)}, 1.0);
    EXPECT_NEAR(p[0], 0.25, 1e-12);
    EXPECT_NEAR(p[1], 0.75, 1e-12);
    const auto g = boltzmann_probabilities({0.1, 0.5, 0.2}, 0.0);
    EXPECT_EQ(g, (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(Ucb, TriesEveryActionFirst) {
    ReferenceWorld w;
    QTable q(w.space.num_states(), w.space.max_actions());
    const ProductState s{cell_state(45), w.dra.initial()};
    const auto idx = w.space.index(s);
    Rng rng(0);
    for (ActionId a = 0; a < 5; ++a) {
        EXPECT_EQ(select_action(PolicyKind::ucb1, q, nullptr, w.space, s, {0, 0, 0, 0, 1.0}, rng), a);
        q.update(idx, a, 0.0);
    }
    // all tried: the bonus is equal, so the value decides
    q.update(idx, 2, 1.0);
    q.update(idx, 0, 0.0);
    q.update(idx, 1, 0.0);
    q.update(idx, 3, 0.0);
    q.update(idx, 4, 0.0);
    EXPECT_EQ(select_action(PolicyKind::ucb1, q, nullptr, w.space, s, {0, 0, 0, 0, 1.0}, rng), 2);
}

TEST(QTable, HarmonicAveraging) {
    QTable q(1, 1);
    q.update(0, 0, 3.0);
    q.update(0, 0, 5.0);
    EXPECT_DOUBLE_EQ(q.value(0, 0), 4.0);
    EXPECT_EQ(q.count(0, 0), 2u);
    const auto back = qtable_from_json(to_json(q));
    EXPECT_DOUBLE_EQ(back.value(0, 0), 4.0);
    EXPECT_EQ(back.count(0, 0), 2u);
}

TEST(Schedule, StartFloorAndRatio) {
    const ExplorationSchedule s;
    const auto p0 = decay_params(s, 0);
    EXPECT_DOUBLE_EQ(p0.epsilon, s.epsilon_start);
    EXPECT_DOUBLE_EQ(p0.delta_e, s.epsilon_start * s.random_share_start);
    EXPECT_NEAR(p0.delta_b + p0.delta_e, p0.epsilon, 1e-15);
    EXPECT_DOUBLE_EQ(p0.temperature, s.temperature_start);

    const auto late = decay_params(s, 100000000);
    EXPECT_LE(late.epsilon, s.epsilon_floor + 1e-15);
    EXPECT_DOUBLE_EQ(late.temperature, s.temperature_floor);

    double last = kInfinity;
    for (std::uint64_t k = 0; k < 10000; ++k) {
        const auto p = decay_params(s, k);
        ASSERT_GE(p.delta_b, 0.0);
        const double ratio = p.delta_e / p.delta_b;
        ASSERT_LE(ratio, last + 1e-12);
        last = ratio;
    }
}

TEST(Schedule, Validation) {
    ExplorationSchedule s;
    s.epsilon_start = 1.5;
    EXPECT_THROW(validate(s), std::invalid_argument);
    s = {};
    s.random_share_floor = 2.0;
    EXPECT_THROW(validate(s), std::invalid_argument);
}

TEST(Schedule, JsonRoundTrip) {
    ExplorationSchedule s;
    s.ucb_c = 20;
    s.clock = ScheduleClock::episode;
    const auto back = schedule_from_json(to_json(s));
    EXPECT_EQ(back.ucb_c, 20);
    EXPECT_EQ(back.clock, ScheduleClock::episode);
}

TEST(Bias, WorkedExampleSets) {
    const auto mdp = example_hallway();
    const auto dra = eventually_exit();
    const ProductSpace space(mdp, dra);
    TrueKernel truth(mdp);
    BiasContext ctx(space, truth);
    const auto& sets = ctx.goal_sets(0);
    EXPECT_EQ(sets.q_goal, std::vector<AutState>{1});
    EXPECT_EQ(sets.x_goal, (std::vector<MdpState>{5, 6}));
    EXPECT_EQ(ctx.cost_field(0)[0], 3.0);
    EXPECT_EQ(ctx.closer_set(0, 0), (std::vector<MdpState>{1, 2}));
    Rng rng(0);
    const auto choice = ctx.biased_action(0, 0, rng);
    ASSERT_TRUE(choice.has_value());
    EXPECT_EQ(choice->action, 1);
    EXPECT_EQ(choice->target, 2);
}

TEST(Bias, UniformTargetSelection) {
    const auto mdp = example_hallway();
    const auto dra = eventually_exit();
    const ProductSpace space(mdp, dra);
    TrueKernel truth(mdp);
    BiasOptions o;
    o.selection = CloserSelection::uniform;
    BiasContext ctx(space, truth, o);
    Rng rng(4);
    int seen1 = 0, seen2 = 0;
    for (int i = 0; i < 200; ++i) {
        const auto c = ctx.biased_action(0, 0, rng);
        ASSERT_TRUE(c.has_value());
        if (c->target == 1) {
            EXPECT_EQ(c->action, 0);
            ++seen1;
        } else {
            EXPECT_EQ(c->action, 1);
            ++seen2;
        }
    }
    EXPECT_GT(seen1, 0);
    EXPECT_GT(seen2, 0);
}

TEST(Bias, DisabledAtAcceptingDistanceZero) {
    const auto mdp = example_hallway();
    const auto dra = eventually_exit();
    const ProductSpace space(mdp, dra);
    TrueKernel truth(mdp);
    BiasOptions o;
    o.bias_at_accepting = false;
    BiasContext ctx(space, truth, o);
    EXPECT_TRUE(ctx.goal_sets(1).empty());
    Rng rng(0);
    EXPECT_FALSE(ctx.biased_product_action({0, 1}, rng).has_value());
}

TEST(Bias, SingleActionState) {
    KernelRows rows{{{{1, 1.0}}}, {{{1, 1.0}}}};
    const LabeledMdp m(0, rows, {Symbol{}, Symbol{1}});
    TransitionStructure t(2, {1});
    t.add_edge(0, Guard::not_prop(1), 0);
    t.add_edge(0, Guard::prop(1), 1);
    t.add_edge(1, Guard::always(), 1);
    const RabinAutomaton a(std::move(t), 0, {{{1}, {}}});
    const ProductSpace space(m, a);
    TrueKernel truth(m);
    BiasContext ctx(space, truth);
    Rng rng(0);
    const auto c = ctx.biased_action(0, 0, rng);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->action, 0);
}

TEST(Bias, CloserSetMatchesBfsOnKnownGrid) {
    ReferenceWorld w;
    TrueKernel truth(w.mdp);
    BiasContext ctx(w.space, truth);
    const AutState q0 = w.dra.initial();
    const auto& sets = ctx.goal_sets(q0);
    EXPECT_EQ(sets.x_goal, std::vector<MdpState>{cell_state(100)});
    ASSERT_TRUE(sets.avoid[cell_state(46)]);

    // independent BFS over 4-neighbors from cell 100, never entering cell 46
    std::vector<int> hops(100, -1);
    std::deque<int> frontier{99};
    hops[99] = 0;
    while (!frontier.empty()) {
        const int y = frontier.front();
        frontier.pop_front();
        const int r = y / 10, c = y % 10;
        for (auto [dr, dc] : {std::pair{0, 1}, {0, -1}, {1, 0}, {-1, 0}}) {
            const int nr = r + dr, nc = c + dc;
            if (nr < 0 || nr > 9 || nc < 0 || nc > 9) continue;
            const int x = nr * 10 + nc;
            if (x == 45 || hops[x] >= 0) continue;
            hops[x] = hops[y] + 1;
            frontier.push_back(x);
        }
    }
    const auto& cost = ctx.cost_field(q0);
    for (int x = 0; x < 100; ++x) {
        if (x == 45) {
            EXPECT_EQ(cost[x], kInfinity);
            continue;
        }
        EXPECT_EQ(cost[x], hops[x]) << "cell " << x + 1;
        std::vector<MdpState> want;
        if (hops[x] > 0) {
            const int r = x / 10, c = x % 10;
            for (int y = 0; y < 100; ++y) {
                const int yr = y / 10, yc = y % 10;
                if (std::abs(yr - r) + std::abs(yc - c) == 1 && y != 45 && hops[y] == hops[x] - 1) want.push_back(y);
            }
        }
        EXPECT_EQ(ctx.closer_set(q0, x), want) << "cell " << x + 1;
        for (MdpState y : ctx.closer_set(q0, x)) EXPECT_EQ(cost[y], cost[x] - 1);
    }
}

TEST(Bias, GoalSetsMatchDefinitionsOnRandomAutomata) {
    Rng rng(31);
    GridWorldSpec g;
    g.width = g.height = 3;
    for (int i = 0; i < 40; ++i) {
        const auto dra = random_rabin_automaton(rng, 5, 3);
        if (!dra.satisfiable()) continue;
        g.labeled_cells = dra.aps();
        const auto mdp = build_gridworld(g);
        const ProductSpace space(mdp, dra);
        TrueKernel truth(mdp);
        BiasContext ctx(space, truth);
        for (std::size_t q = 0; q < dra.size(); ++q) {
            const auto qa = static_cast<AutState>(q);
            const int d = dra.distance(qa);
            if (d == kUnreachable || d == 0) continue;
            std::vector<AutState> q_goal;
            for (AutState r : dra.pruned()[q])
                if (dra.distance(r) == d - 1) q_goal.push_back(r);
            const auto& sets = ctx.goal_sets(qa);
            EXPECT_EQ(sets.q_goal, q_goal);
            std::vector<MdpState> x_goal;
            for (MdpState x = 0; x < 9; ++x) {
                const AutState next = dra.step(qa, mdp.label(x));
                const bool in_goal = std::find(q_goal.begin(), q_goal.end(), next) != q_goal.end();
                if (in_goal) x_goal.push_back(x);
                EXPECT_EQ(static_cast<bool>(sets.avoid[x]), !in_goal && next != qa) << "q=" << q << " x=" << x;
            }
            EXPECT_EQ(sets.x_goal, x_goal);
        }
    }
}
