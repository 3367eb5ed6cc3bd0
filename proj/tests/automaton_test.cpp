#include "ltlrl/automaton.hpp"
#include "ltlrl/hoa.hpp"
#include "ltlrl/oracle.hpp"
#include "ltlrl/patterns.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace ltlrl;

namespace {

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(LTLRL_FIXTURE_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Brute-force pruned graph: q -> r iff some feasible symbol fires a guard from q to r.
Adjacency brute_pruned(const TransitionStructure& t) {
    Adjacency out(t.size());
    const auto symbols = feasible_symbols(t.aps());
    for (std::size_t q = 0; q < t.size(); ++q) {
        for (const auto& e : t.edges(static_cast<AutState>(q)))
            for (const auto& s : symbols)
                if (e.guard.eval(s)) {
                    out[q].push_back(e.target);
                    break;
                }
        for (AutState r : t.epsilon(static_cast<AutState>(q))) out[q].push_back(r);
        std::sort(out[q].begin(), out[q].end());
        out[q].erase(std::unique(out[q].begin(), out[q].end()), out[q].end());
    }
    return out;
}

} // namespace

TEST(Guard, EvaluatesDnf) {
    const Guard g = (Guard::prop(1) && Guard::not_prop(2)) || Guard::prop(3);
    EXPECT_TRUE(g.eval(Symbol{1}));
    EXPECT_FALSE(g.eval(Symbol{1, 2}));
    EXPECT_TRUE(g.eval(Symbol{2, 3}));
    EXPECT_FALSE(g.eval(Symbol{}));
    EXPECT_TRUE(Guard::always().eval(Symbol{}));
    EXPECT_FALSE(Guard::never().eval(Symbol{1}));
}

TEST(Guard, NegationIsComplement) {
    const Guard g = (Guard::prop(1) && Guard::prop(2)) || Guard::not_prop(3);
    const Guard n = !g;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<PropId> p;
        for (int b = 0; b < 3; ++b)
            if (mask & (1 << b)) p.push_back(b + 1);
        const Symbol s(p);
        EXPECT_NE(g.eval(s), n.eval(s));
    }
}

TEST(Guard, FeasibleSatisfiability) {
    EXPECT_FALSE((Guard::prop(1) && Guard::prop(2)).feasibly_satisfiable());
    EXPECT_TRUE(Guard::prop(1).feasibly_satisfiable());
    EXPECT_TRUE(Guard::not_prop(1).feasibly_satisfiable());
}

TEST(FeasibleSymbols, EmptyAndSingletons) {
    const std::vector<PropId> two{1, 2};
    const auto s = feasible_symbols(two);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], Symbol{});
    EXPECT_EQ(s[1], Symbol{1});
    EXPECT_EQ(s[2], Symbol{2});
    EXPECT_EQ(feasible_symbols({}).size(), 1u);
    std::vector<PropId> grid(100);
    for (int i = 0; i < 100; ++i) grid[i] = i + 1;
    EXPECT_EQ(feasible_symbols(grid).size(), 101u);
}

TEST(Prune, DropsInfeasibleEdge) {
    TransitionStructure t(2, {1, 2});
    t.add_edge(0, Guard::prop(1) && Guard::prop(2), 1);
    t.add_edge(0, !(Guard::prop(1) && Guard::prop(2)), 0);
    t.add_edge(1, Guard::always(), 1);
    const auto p = prune(t);
    EXPECT_EQ(p[0], std::vector<AutState>{0});
}

TEST(Prune, MatchesBruteForceOnRandomAutomata) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_rabin_automaton(rng, 6, 3);
        EXPECT_EQ(a.pruned(), brute_pruned(a.structure())) << "automaton " << i;
    }
}

TEST(Prune, AddingSymbolNeverRemovesEdge) {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_rabin_automaton(rng, 6, 3);
        TransitionStructure wider(a.size(), a.aps());
        for (std::size_t q = 0; q < a.size(); ++q)
            for (const auto& e : a.structure().edges(static_cast<AutState>(q)))
                wider.add_edge(static_cast<AutState>(q), e.guard || Guard::prop(a.aps().front()), e.target);
        const auto before = a.pruned();
        const auto after = prune(wider);
        for (std::size_t q = 0; q < a.size(); ++q)
            for (AutState r : before[q]) EXPECT_TRUE(std::binary_search(after[q].begin(), after[q].end(), r));
    }
}

TEST(Rabin, RejectsNondeterminism) {
    TransitionStructure t(2, {1});
    t.add_edge(0, Guard::always(), 0);
    t.add_edge(0, Guard::prop(1), 1);
    t.add_edge(1, Guard::always(), 1);
    EXPECT_THROW(RabinAutomaton(t, 0, {{{1}, {}}}), AutomatonError);
}

TEST(Rabin, RejectsMissingTransition) {
    TransitionStructure t(1, {1});
    t.add_edge(0, Guard::prop(1), 0);
    EXPECT_THROW(RabinAutomaton(t, 0, {{{0}, {}}}), AutomatonError);
}

TEST(Rabin, RejectsOutOfRangePairState) {
    TransitionStructure t(1, {});
    t.add_edge(0, Guard::always(), 0);
    EXPECT_THROW(RabinAutomaton(t, 0, {{{3}, {}}}), AutomatonError);
}

TEST(Rabin, SingleAcceptingState) {
    TransitionStructure t(1, {});
    t.add_edge(0, Guard::always(), 0);
    const RabinAutomaton a(t, 0, {{{0}, {}}});
    EXPECT_EQ(a.distance(0), 0);
    EXPECT_TRUE(a.satisfiable());
    EXPECT_EQ(a.step(0, Symbol{}), 0);
}

TEST(Rabin, UnsatisfiableSignal) {
    TransitionStructure t(2, {1});
    t.add_edge(0, Guard::always(), 0);
    t.add_edge(1, Guard::always(), 1);
    const RabinAutomaton a(t, 0, {{{1}, {}}});
    EXPECT_EQ(a.distance(0), kUnreachable);
    EXPECT_FALSE(a.satisfiable());
    EXPECT_THROW(require_satisfiable(a), UnsatisfiableTask);
}

TEST(Patterns, ReferenceAutomatonSizes) {
    const auto ra1 = build_pattern_automaton(reference_tasks::reach_avoid_1());
    EXPECT_EQ(ra1.size(), 4u);
    EXPECT_EQ(ra1.pairs().size(), 1u);
    const auto ra2 = build_pattern_automaton(reference_tasks::reach_avoid_2());
    EXPECT_EQ(ra2.size(), 4u);
    const auto cov = build_pattern_automaton(reference_tasks::coverage());
    EXPECT_EQ(cov.size(), 8u);
    EXPECT_EQ(cov.pairs().size(), 1u);
    const auto sur = build_pattern_automaton(reference_tasks::surveillance());
    EXPECT_EQ(sur.size(), 14u);
    EXPECT_EQ(sur.pairs().size(), 1u);
}

TEST(Patterns, ReachAvoidSemantics) {
    const auto a = build_pattern_automaton(reference_tasks::reach_avoid_1());
    const AutState q0 = a.initial();
    const AutState trap = a.step(q0, Symbol{46});
    EXPECT_EQ(a.distance(trap), kUnreachable);
    EXPECT_TRUE(a.in_bad(trap) || !a.in_good(trap));
    EXPECT_EQ(a.step(q0, Symbol{}), q0);

    // lasso ending in {100}^omega visits G infinitely often
    AutState q = q0;
    for (PropId p : {0, 12, 0}) q = a.step(q, p ? Symbol{p} : Symbol{});
    int good_visits = 0;
    for (int i = 0; i < 20; ++i) {
        q = a.step(q, Symbol{100});
        good_visits += a.in_good(q);
    }
    EXPECT_EQ(good_visits, 20);
    EXPECT_FALSE(a.in_bad(q));
}

TEST(Distances, ZeroExactlyOnGoodStates) {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_rabin_automaton(rng);
        for (std::size_t q = 0; q < a.size(); ++q)
            EXPECT_EQ(a.distance(static_cast<AutState>(q)) == 0, a.in_good(static_cast<AutState>(q)));
    }
}

TEST(Distances, LipschitzAlongPrunedEdges) {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_rabin_automaton(rng);
        for (std::size_t q = 0; q < a.size(); ++q)
            for (AutState r : a.pruned()[q]) {
                if (a.distance(r) == kUnreachable) continue;
                EXPECT_LE(a.distance(static_cast<AutState>(q)), a.distance(r) + 1);
            }
    }
}

TEST(Distances, MatchFloydWarshallOnRandomAutomata) {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_rabin_automaton(rng, 8, 3);
        const auto check = verify_distance_table(a);
        EXPECT_TRUE(check.matches()) << "automaton " << i;
        EXPECT_EQ(distance_table(a), a.distances());
    }
}

TEST(Ldba, EpsilonEdgeGivesFiniteDistance) {
    const auto t = parse_hoa(fixture("gf_two_targets.hoa"));
    const auto& l = std::get<LimitDetBuchi>(t);
    ASSERT_EQ(l.num_sets(), 2u);
    EXPECT_FALSE(l.in_deterministic_part(0));
    EXPECT_EQ(l.distance(0, 0), 1);  // only through the epsilon edge
    EXPECT_EQ(l.distance(1, 0), 2);
    EXPECT_EQ(l.distance(0, 1), 0);
    EXPECT_TRUE(l.satisfiable());
    EXPECT_EQ(ldba_distance_table(l, 1), l.distances(1));
}

TEST(Ldba, DistancesMatchBruteForce) {
    const auto l = build_pattern_ldba(reference_tasks::surveillance());
    const std::size_t n = l.size();
    const auto g = brute_pruned(l.structure());
    constexpr int inf = 1 << 28;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t q = 0; q < n; ++q) {
        d[q][q] = 0;
        for (AutState r : g[q])
            if (static_cast<std::size_t>(r) != q) d[q][r] = 1;
    }
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][m] + d[m][j]);
    for (std::size_t j = 0; j < l.num_sets(); ++j)
        for (std::size_t q = 0; q < n; ++q) {
            int best = inf;
            for (AutState f : l.accepting_set(j)) best = std::min(best, d[q][f]);
            EXPECT_EQ(l.distance(j, static_cast<AutState>(q)), best == inf ? kUnreachable : best);
        }
}

TEST(Ldba, DeterministicPartIsClosed) {
    const auto l = build_pattern_ldba(reference_tasks::surveillance());
    Rng rng(2);
    const auto symbols = feasible_symbols(l.aps());
    for (int run = 0; run < 200; ++run) {
        AutState q = l.initial();
        bool inside = false;
        for (int t = 0; t < 50; ++t) {
            const auto next = l.step(q, symbols[rng.below(symbols.size())]);
            ASSERT_FALSE(next.empty());
            q = next[rng.below(next.size())];
            if (inside) {
                EXPECT_TRUE(l.in_deterministic_part(q));
                EXPECT_EQ(next.size(), 1u);
            }
            inside = inside || l.in_deterministic_part(q);
        }
    }
}

TEST(Hoa, ParsesReachAvoidFixture) {
    const auto a = parse_hoa_rabin(fixture("reach_avoid_3x3.hoa"));
    EXPECT_EQ(a.size(), 4u);
    ASSERT_EQ(a.pairs().size(), 1u);
    EXPECT_EQ(a.pairs()[0].good, std::vector<AutState>{1});
    EXPECT_EQ(a.step(0, Symbol{5}), 3);
    EXPECT_EQ(a.step(0, Symbol{9}), 1);
    EXPECT_EQ(a.distances(), (std::vector<int>{1, 0, 1, kUnreachable}));
}

TEST(Hoa, RejectsNondeterministicRabin) {
    EXPECT_THROW(parse_hoa(fixture("nondeterministic.hoa")), HoaSemanticError);
}

TEST(Hoa, RejectsMissingSymbol) {
    const char* text = R"(HOA: v1
States: 3
Start: 0
AP: 1 "p1"
Acceptance: 2 Fin(0) & Inf(1)
--BODY--
State: 0
[0] 1
State: 1 {1}
[t] 1
State: 2 {0}
[t] 2
--END--
)";
    EXPECT_THROW(parse_hoa(text), HoaSemanticError);
}

TEST(Hoa, SyntaxErrorCarriesLine) {
    try {
        parse_hoa("HOA: v1\nStates: two\n--BODY--\n--END--\n");
        FAIL();
    } catch (const HoaParseError& e) {
        EXPECT_EQ(e.line(), 2);
    }
}

TEST(Hoa, RoundTripPreservesRelationAndAcceptance) {
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_rabin_automaton(rng, 8, 3);
        const auto b = parse_hoa_rabin(to_hoa(a));
        ASSERT_EQ(a.size(), b.size());
        EXPECT_EQ(a.initial(), b.initial());
        for (std::size_t q = 0; q < a.size(); ++q) {
            EXPECT_EQ(a.in_good(static_cast<AutState>(q)), b.in_good(static_cast<AutState>(q)));
            EXPECT_EQ(a.in_bad(static_cast<AutState>(q)), b.in_bad(static_cast<AutState>(q)));
            for (const auto& s : feasible_symbols(a.aps()))
                EXPECT_EQ(a.step(static_cast<AutState>(q), s), b.step(static_cast<AutState>(q), s));
        }
        EXPECT_EQ(a.distances(), b.distances());
    }
}

TEST(Hoa, LdbaRoundTrip) {
    const auto l = build_pattern_ldba(reference_tasks::surveillance());
    const auto t = parse_hoa(to_hoa(l));
    const auto& m = std::get<LimitDetBuchi>(t);
    ASSERT_EQ(m.size(), l.size());
    ASSERT_EQ(m.num_sets(), l.num_sets());
    for (std::size_t j = 0; j < l.num_sets(); ++j) EXPECT_EQ(m.distances(j), l.distances(j));
}

TEST(Hoa, PropositionNames) {
    EXPECT_EQ(proposition_from_name("p46"), 46);
    EXPECT_EQ(proposition_from_name("pi_100"), 100);
    EXPECT_EQ(proposition_from_name("x3"), 3);
    EXPECT_FALSE(proposition_from_name("goal").has_value());
}
