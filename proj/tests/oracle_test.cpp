#include "ltlrl/config.hpp"
#include "ltlrl/oracle.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <set>

using namespace ltlrl;

namespace {

ExplicitPmdp reference_pmdp(const std::string& task) {
    const auto world = make_world(reference_experiment(task));
    return materialize(world->space());
}

std::vector<char> mark(std::size_t n, std::initializer_list<std::size_t> states) {
    std::vector<char> v(n, 0);
    for (auto s : states) v[s] = 1;
    return v;
}

// s0: a0 -> s1 (p) / s2 (1-p); a1 -> s1 (0.4) / s0 (0.5) / s2 (0.1). s1 accepting sink, s2 rejecting sink.
ExplicitPmdp chain(double p) {
    PmdpRows rows{{{{1, p}, {2, 1.0 - p}}, {{1, 0.4}, {0, 0.5}, {2, 0.1}}}, {{{1, 1.0}}}, {{{2, 1.0}}}};
    return ExplicitPmdp(0, rows, {AcceptanceClause{{mark(3, {1})}, mark(3, {})}});
}

ExplicitPmdp random_pmdp(Rng& rng, std::size_t n) {
    PmdpRows rows(n);
    for (auto& state : rows) {
        state.resize(1 + rng.below(3));
        for (auto& row : state) {
            const std::size_t k = 1 + rng.below(4);
            double total = 0.0;
            std::map<std::size_t, double> mass;
            for (std::size_t i = 0; i < k; ++i) {
                const double w = 0.05 + rng.uniform();
                mass[rng.below(n)] += w;
                total += w;
            }
            for (auto [t, w] : mass) row.push_back({t, w / total});
        }
    }
    std::vector<char> inf(n, 0), fin(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        inf[s] = rng.uniform() < 0.2;
        fin[s] = !inf[s] && rng.uniform() < 0.2;
    }
    return ExplicitPmdp(0, rows, {AcceptanceClause{{inf}, fin}});
}

StochasticPolicy random_policy(Rng& rng, const ExplicitPmdp& p) {
    StochasticPolicy mu(p.num_states());
    for (std::size_t s = 0; s < p.num_states(); ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < p.num_actions(s); ++a) total += mu[s].emplace_back(rng.uniform() + 0.01);
        for (auto& v : mu[s]) v /= total;
    }
    return mu;
}

std::size_t sample_index(Rng& rng, const std::vector<double>& weights) {
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return weights.size() - 1;
}

void expect_mecs_well_formed(const ExplicitPmdp& p, const std::vector<EndComponent>& mecs) {
    std::set<std::size_t> seen;
    for (const auto& c : mecs) {
        ASSERT_EQ(c.states.size(), c.actions.size());
        const std::set<std::size_t> members(c.states.begin(), c.states.end());
        for (std::size_t i = 0; i < c.states.size(); ++i) {
            EXPECT_TRUE(seen.insert(c.states[i]).second) << "state in two components";
            EXPECT_FALSE(c.actions[i].empty());
            for (ActionId a : c.actions[i])
                for (const auto& e : p.row(c.states[i], a)) EXPECT_TRUE(members.count(e.target)) << "leaves component";
        }
    }
}

const std::string kSmallGrid = R"({
  "environment": {"type": "grid", "width": 3, "height": 3},
  "task": {"pattern": "reach_avoid_stay", "goal": 9, "obstacles": [5]}
})";

} // namespace

TEST(Materialize, ReferenceProductSizes) {
    EXPECT_EQ(reference_pmdp("reach_avoid_1").num_states(), 400u);
    EXPECT_EQ(reference_pmdp("reach_avoid_2").num_states(), 400u);
    EXPECT_EQ(reference_pmdp("coverage").num_states(), 800u);
    EXPECT_EQ(reference_pmdp("surveillance").num_states(), 1400u);
}

TEST(Materialize, SingleCellGrid) {
    const auto world = make_world(experiment_from_json(
        {{"environment", {{"type", "grid"}, {"width", 1}, {"height", 1}, {"labeled_cells", {1}}}},
         {"task", {{"pattern", "reach_avoid_stay"}, {"goal", 1}, {"obstacles", nlohmann::json::array()}}}}));
    const auto p = materialize(world->space());
    EXPECT_EQ(p.num_states(), world->space().num_states());
    EXPECT_EQ(p.num_states(), std::get<RabinAutomaton>(world->automaton()).size());
    const auto sat = max_sat_probability(p);
    EXPECT_NEAR(sat[p.initial()], 1.0, 1e-9);
}

TEST(Materialize, StateCap) {
    const auto world = make_world(reference_experiment("surveillance"));
    EXPECT_THROW(materialize(world->space(), 100), OracleError);
}

TEST(Mec, SingletonAcceptingSink) {
    PmdpRows rows{{{{0, 1.0}}}};
    const ExplicitPmdp p(0, rows, {AcceptanceClause{{mark(1, {0})}, mark(1, {})}});
    const auto mecs = accepting_mecs(p);
    ASSERT_EQ(mecs.size(), 1u);
    EXPECT_EQ(mecs[0].states, std::vector<std::size_t>{0});
}

TEST(Mec, GoodInsideBadIsRejected) {
    PmdpRows rows{{{{0, 1.0}}}};
    const ExplicitPmdp p(0, rows, {AcceptanceClause{{mark(1, {0})}, mark(1, {0})}});
    EXPECT_TRUE(accepting_mecs(p).empty());
    EXPECT_EQ(max_sat_probability(p)[0], 0.0);
}

TEST(Mec, ReachAvoidDeterministicGridHasGoalComponent) {
    auto config = reference_experiment("reach_avoid_1");
    config.environment["p_intended"] = 1.0;
    const auto world = make_world(config);
    const auto& space = world->space();
    const auto& dra = std::get<RabinAutomaton>(world->automaton());
    const auto p = materialize(space);
    const AutState goal_q = dra.step(dra.initial(), Symbol{100});
    const std::size_t target = space.index({cell_state(100), goal_q});
    bool found = false;
    for (const auto& c : accepting_mecs(p))
        found = found || std::binary_search(c.states.begin(), c.states.end(), target);
    EXPECT_TRUE(found);
    EXPECT_NEAR(max_sat_probability(p)[p.initial()], 1.0, 1e-9);
}

TEST(Mec, SlippingGridHasNoAcceptingComponent) {
    // with p_int < 1 every action can slip off the goal cell, so staying forever has probability 0
    const auto p = reference_pmdp("reach_avoid_1");
    EXPECT_TRUE(accepting_mecs(p).empty());
    EXPECT_EQ(max_sat_probability(p)[p.initial()], 0.0);
}

TEST(Mec, ComponentsDisjointAndClosed) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_pmdp(rng, 2 + rng.below(25));
        expect_mecs_well_formed(p, maximal_end_components(p));
        expect_mecs_well_formed(p, accepting_mecs(p));
    }
    auto config = reference_experiment("coverage");
    config.environment["p_intended"] = 1.0;
    const auto p = materialize(make_world(config)->space());
    expect_mecs_well_formed(p, maximal_end_components(p));
    expect_mecs_well_formed(p, accepting_mecs(p));
}

TEST(SatProbability, ChainClosedForm) {
    const auto p = chain(0.6);
    const auto best = max_sat_probability(p);
    EXPECT_NEAR(best[0], 0.8, 1e-9);  // 0.4 / (1 - 0.5)
    EXPECT_EQ(best[1], 1.0);
    EXPECT_EQ(best[2], 0.0);
    EXPECT_NEAR(policy_sat_probability(p, deterministic_policy(p, {0, 0, 0}))[0], 0.6, 1e-9);
    EXPECT_NEAR(policy_sat_probability(p, deterministic_policy(p, {1, 0, 0}))[0], 0.8, 1e-9);
}

TEST(SatProbability, MonotoneInMassTowardAcceptance) {
    double last = -1.0;
    for (double q : {0.1, 0.5, 0.81, 0.9, 1.0}) {
        const double v = max_sat_probability(chain(q))[0];
        EXPECT_GE(v, last);
        last = v;
    }
    EXPECT_NEAR(last, 1.0, 1e-9);
}

TEST(SatProbability, PolicyNeverExceedsMax) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_pmdp(rng, 15);
        const auto best = max_sat_probability(p);
        const auto mine = policy_sat_probability(p, random_policy(rng, p));
        for (std::size_t s = 0; s < p.num_states(); ++s) EXPECT_LE(mine[s], best[s] + 1e-8);
    }
}

TEST(Evaluate, ZeroRewardsGiveZero) {
    const auto p = chain(0.5);
    const std::vector<double> r(p.num_entries(), 0.0);
    for (double v : evaluate_policy(p, deterministic_policy(p, {0, 0, 0}), r, 0.99)) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, AbsorbingUnitReward) {
    PmdpRows rows{{{{0, 1.0}}}};
    const ExplicitPmdp p(0, rows, {});
    const auto u = evaluate_policy(p, deterministic_policy(p, {0}), {1.0}, 0.99);
    EXPECT_NEAR(u[0], 100.0, 1e-8);
}

TEST(Evaluate, MatchesMonteCarloOnRandomPmdp) {
    Rng rng(21);
    const auto p = random_pmdp(rng, 20);
    const auto mu = random_policy(rng, p);
    std::vector<double> r(p.num_entries());
    for (auto& v : r) v = rng.uniform() * 2.0 - 1.0;
    const double gamma = 0.9;
    const auto exact = evaluate_policy(p, mu, r, gamma);

    constexpr int n = 100000;
    const int horizon = 200;  // gamma^200 < 1e-9
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        std::size_t s = p.initial();
        double g = 0.0, disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const auto a = static_cast<ActionId>(sample_index(rng, mu[s]));
            const auto row = p.row(s, a);
            std::vector<double> w;
            for (const auto& e : row) w.push_back(e.prob);
            const std::size_t k = sample_index(rng, w);
            g += disc * r[p.entry_offset(s, a) + k];
            disc *= gamma;
            s = row[k].target;
        }
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double sigma = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(exact[p.initial()], mean, 3.0 * sigma);
}

TEST(Evaluate, GreedyOfOptimalQMatchesMaxQ) {
    const auto world = make_world(experiment_from_json(nlohmann::json::parse(kSmallGrid)));
    const auto& space = world->space();
    const auto p = materialize(space);
    const auto r = transition_rewards(p, space, RewardParams{});
    const auto q = optimal_action_values(p, r, 0.99, space.max_actions());
    std::vector<ActionId> greedy(p.num_states());
    for (std::size_t s = 0; s < p.num_states(); ++s) greedy[s] = q.greedy(s, p.num_actions(s));
    const auto u = evaluate_policy(p, deterministic_policy(p, greedy), r, 0.99);
    for (std::size_t s = 0; s < p.num_states(); ++s) EXPECT_NEAR(u[s], q.max_value(s, p.num_actions(s)), 1e-6);
}

TEST(Evaluate, LdbaRewardsRejected) {
    const auto world = make_world(experiment_from_json(
        {{"environment", {{"type", "grid"}, {"width", 3}, {"height", 3}}},
         {"task", {{"pattern", "surveillance"}, {"targets", {1, 9}}, {"automaton", "ldba"}}}}));
    const auto p = materialize(world->space());
    EXPECT_THROW(transition_rewards(p, world->space(), RewardParams{}), OracleError);
}

TEST(Improvement, RandomTrialsOnSmallGrid) {
    const auto world = make_world(experiment_from_json(nlohmann::json::parse(kSmallGrid)));
    const auto p = materialize(world->space());
    ImprovementOptions o;
    o.trials = 100;
    const auto report = verify_policy_improvement(world->space(), p, o);
    EXPECT_EQ(report.trials, 100u);
    EXPECT_TRUE(report.passed()) << to_json(report).dump();
    o.zero_bias = true;
    o.seed = 1;
    EXPECT_TRUE(verify_policy_improvement(world->space(), p, o).passed());
}

TEST(BiasTheorem, GoalSetEightCellHallway) {
    const auto inst = hallway_instance(BiasTheorem::goal_set, 8, 2);
    const auto report = verify_bias_theorem(inst, 20000, 5);
    EXPECT_GT(report.biased.exact_biased, report.biased.exact_unbiased);
    EXPECT_TRUE(report.exact_separated);
    EXPECT_TRUE(report.intervals_separated) << to_json(report).dump();
    EXPECT_DOUBLE_EQ(report.control.exact_biased, report.control.exact_unbiased);
    EXPECT_TRUE(report.control_overlap);
    EXPECT_TRUE(report.passed());
}

TEST(BiasTheorem, SingleTarget) {
    const auto inst = hallway_instance(BiasTheorem::single_target, 7, 3);
    const auto report = verify_bias_theorem(inst, 20000, 6);
    EXPECT_TRUE(report.exact_separated);
    EXPECT_GE(report.target_q, 0);
    EXPECT_TRUE(report.passed()) << to_json(report).dump();
}

TEST(BiasTheorem, HypothesisFailureRefusesToRun) {
    // both actions move to either neighbor with probability 1/2, so no action beats the average
    auto inst = hallway_instance(BiasTheorem::goal_set, 5, 2);
    KernelRows rows{{{{0, 1.0}}, {{0, 1.0}}}};
    for (MdpState x = 1; x < 4; ++x) rows.push_back({{{x - 1, 0.5}, {x + 1, 0.5}}, {{x - 1, 0.5}, {x + 1, 0.5}}});
    rows.push_back({{{4, 1.0}}, {{4, 1.0}}});
    inst.mdp = LabeledMdp(2, rows, {Symbol{1}, Symbol{}, Symbol{}, Symbol{}, Symbol{2}});
    EXPECT_THROW(verify_bias_theorem(inst, 100), HypothesisError);
}

TEST(BiasTheorem, ZeroBiasHasNoEffect) {
    auto inst = hallway_instance(BiasTheorem::goal_set, 8, 2);
    inst.params.delta_b = 0.0;
    inst.params.delta_e = 0.5;
    const auto report = verify_bias_theorem(inst, 5000, 7);
    EXPECT_DOUBLE_EQ(report.biased.exact_biased, report.biased.exact_unbiased);
    EXPECT_FALSE(report.passed());
}

TEST(Wilson, KnownValues) {
    const auto e = wilson_interval(50, 100, 1.959963984540054);
    EXPECT_NEAR(e.lower, 0.40383, 1e-5);
    EXPECT_NEAR(e.upper, 0.59617, 1e-5);
    const auto none = wilson_interval(0, 0);
    EXPECT_EQ(none.lower, 0.0);
    EXPECT_EQ(none.upper, 1.0);
    const auto all = wilson_interval(10, 10);
    EXPECT_NEAR(all.upper, 1.0, 1e-12);
    EXPECT_LT(all.lower, 1.0);
}

TEST(Distance, RandomAutomataMatchFloydWarshall) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto check = verify_distance_table(random_rabin_automaton(rng));
        EXPECT_TRUE(check.matches()) << to_json(check).dump();
    }
}
