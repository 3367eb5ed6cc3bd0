#include "ltlrl/bench.hpp"
#include "ltlrl/config.hpp"
#include "ltlrl/hoa.hpp"
#include "ltlrl/oracle.hpp"
#include "ltlrl/patterns.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ltlrl;

namespace {

enum Exit { ok = 0, config_error = 1, verification_failure = 2, runtime_error = 3 };

struct VerificationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write " + out);
    f << j.dump(2) << "\n";
}

ExperimentConfig load_experiment(const std::string& path) {
    const fs::path p(path);
    return experiment_from_json(read_json_file(p), p.parent_path());
}

std::vector<ActionId> greedy_from_json(const json& j) { return j.get<std::vector<ActionId>>(); }

AutState parse_q(const std::string& text, const TaskAutomaton& automaton) {
    const auto names = std::visit([](const auto& a) { return a.state_names(); }, automaton);
    for (std::size_t q = 0; q < names.size(); ++q)
        if (names[q] == text) return static_cast<AutState>(q);
    try {
        std::size_t used = 0;
        const int q = std::stoi(text, &used);
        if (used == text.size()) return q;
    } catch (const std::exception&) {
    }
    throw ConfigError("unknown automaton state \"" + text + "\"");
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
    std::string config, out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> episodes;
    std::optional<std::string> policy;
};

int cmd_train(const TrainArgs& a) {
    auto cfg = load_experiment(a.config);
    if (a.seed) cfg.run.seed = *a.seed;
    if (a.episodes) cfg.run.episodes = *a.episodes;
    if (a.policy) cfg.run.policy = policy_kind_from_string(*a.policy);
    const auto world = make_world(cfg);
    const auto r = run_training(world->space(), cfg.run);

    fs::create_directories(a.out_dir);
    std::ofstream csv(fs::path(a.out_dir) / "returns.csv");
    csv << "episode,return,policy,seed\n";
    char buf[32];
    for (std::size_t e = 0; e < r.returns.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%.17g", r.returns[e]);
        csv << e << "," << buf << "," << to_string(cfg.run.policy) << "," << cfg.run.seed << "\n";
    }
    const json checkpoint{{"config", to_json(cfg)},
                          {"q", to_json(r.q)},
                          {"model", to_json(r.model)},
                          {"greedy", r.greedy},
                          {"episodes", r.episodes},
                          {"steps", r.steps},
                          {"converged", r.converged}};
    emit(checkpoint, (fs::path(a.out_dir) / "checkpoint.json").string());
    std::uint64_t collected = 0;
    for (auto g : r.goal_rewards) collected += g;
    emit({{"episodes", r.episodes},
          {"steps", r.steps},
          {"converged", r.converged},
          {"final_return", r.returns.empty() ? 0.0 : r.returns.back()},
          {"goal_rewards", collected},
          {"product_states", world->space().num_states()},
          {"wall_seconds", r.wall_seconds},
          {"output", a.out_dir}},
         "");
    return ok;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
    std::string suite, preset, out_dir = "bench_out";
    std::optional<std::size_t> workers, episodes;
    std::vector<std::uint64_t> seeds;
};

int cmd_bench(const BenchArgs& a) {
    BenchmarkSuite s;
    if (!a.suite.empty()) {
        const fs::path p(a.suite);
        s = suite_from_json(read_json_file(p), p.parent_path());
    } else if (!a.preset.empty()) {
        s = preset_suite(a.preset);
    } else {
        throw ConfigError("bench needs a suite file or --preset");
    }
    if (a.workers) s.workers = *a.workers;
    if (!a.seeds.empty()) s.seeds = a.seeds;
    if (a.episodes)
        for (auto& e : s.experiments) e.base.run.episodes = *a.episodes;
    if (s.long_running) std::cerr << "note: suite \"" << s.name << "\" is long-running\n";
    const auto result = run_suite(s);
    auto summary = write_suite_outputs(s, result, a.out_dir);
    summary["wall_seconds"] = result.wall_seconds;
    summary["output"] = a.out_dir;
    emit(summary, "");
    for (const auto& r : result.runs)
        if (r.error) return runtime_error;
    return ok;
}

// --- verify ----------------------------------------------------------------

struct VerifyArgs {
    std::size_t trials = 100000, improvement_trials = 100, automata = 50;
    std::uint64_t seed = 0;
    std::vector<std::string> hoa;
    std::string out;
};

json verify_distances(const VerifyArgs& a, bool& passed) {
    json cases = json::array();
    auto check = [&](const std::string& name, const RabinAutomaton& dra) {
        const auto c = verify_distance_table(dra);
        passed = passed && c.matches();
        cases.push_back({{"automaton", name}, {"states", dra.size()}, {"check", to_json(c)}});
    };
    check("reach_avoid_1", build_pattern_automaton(reference_tasks::reach_avoid_1()));
    check("reach_avoid_2", build_pattern_automaton(reference_tasks::reach_avoid_2()));
    check("coverage", build_pattern_automaton(reference_tasks::coverage()));
    check("surveillance", build_pattern_automaton(reference_tasks::surveillance()));
    for (const auto& path : a.hoa) {
        auto t = parse_hoa(read_text_file(path));
        if (auto* dra = std::get_if<RabinAutomaton>(&t)) check(path, *dra);
    }
    Rng rng(a.seed);
    std::size_t random_ok = 0;
    for (std::size_t i = 0; i < a.automata; ++i) {
        const auto dra = random_rabin_automaton(rng);
        const auto c = verify_distance_table(dra);
        if (c.matches()) ++random_ok;
        else cases.push_back({{"automaton", "random #" + std::to_string(i)}, {"check", to_json(c)}});
    }
    passed = passed && random_ok == a.automata;
    return {{"named", cases}, {"random", {{"automata", a.automata}, {"matching", random_ok}}}};
}

int cmd_verify(const VerifyArgs& a) {
    bool passed = true;
    json report;

    const auto dra = build_pattern_automaton(ReachAvoidStay{9, {5}});
    GridWorldSpec g;
    g.width = g.height = 3;
    g.labeled_cells = dra.aps();
    const auto mdp = build_gridworld(g);
    const ProductSpace space(mdp, dra);
    const auto pmdp = materialize(space);
    ImprovementOptions io;
    io.trials = a.improvement_trials;
    io.seed = a.seed;
    const auto improvement = verify_policy_improvement(space, pmdp, io);
    io.zero_bias = true;
    const auto improvement_unbiased = verify_policy_improvement(space, pmdp, io);
    passed = passed && improvement.passed() && improvement_unbiased.passed();
    report["policy_improvement"] = {{"product_states", pmdp.num_states()},
                                    {"biased", to_json(improvement)},
                                    {"zero_bias", to_json(improvement_unbiased)}};

    const auto t1 = verify_bias_theorem(hallway_instance(BiasTheorem::goal_set, 7, 2), a.trials, a.seed);
    const auto t2 = verify_bias_theorem(hallway_instance(BiasTheorem::single_target, 7, 3), a.trials, a.seed + 100);
    passed = passed && t1.passed() && t2.passed();
    report["theorem_1"] = to_json(t1);
    report["theorem_2"] = to_json(t2);

    report["distance_tables"] = verify_distances(a, passed);
    report["passed"] = passed;
    emit(report, a.out);
    if (!passed) throw VerificationFailed("one or more oracle checks failed");
    return ok;
}

// --- inspect-automaton -----------------------------------------------------

int cmd_inspect(const std::string& source, const std::string& out) {
    TaskAutomaton t = [&]() -> TaskAutomaton {
        const fs::path p(source);
        if (fs::exists(p)) {
            if (p.extension() == ".json") {
                const auto j = read_json_file(p);
                return build_task(j.contains("task") ? load_experiment(source).task : j);
            }
            return parse_hoa(read_text_file(p));
        }
        return build_task({{"reference_task", source}});
    }();
    emit(std::visit([](const auto& a) { return to_json(a); }, t), out);
    return ok;
}

// --- policy-grid -----------------------------------------------------------

int cmd_policy_grid(const std::string& checkpoint, const std::string& q_text, bool as_json) {
    const auto ck = read_json_file(checkpoint);
    const auto cfg = experiment_from_json(ck.at("config"));
    const auto world = make_world(cfg);
    const auto greedy = greedy_from_json(ck.at("greedy"));
    if (greedy.size() != world->space().num_states())
        throw ConfigError("checkpoint greedy policy does not match the product size");
    const AutState q = parse_q(q_text, world->automaton());
    if (as_json) {
        std::cout << policy_grid_json(world->space(), greedy, q).dump(2) << "\n";
    } else {
        for (const auto& row : policy_grid(world->space(), greedy, q)) std::cout << row << "\n";
    }
    return ok;
}

// --- oracle ----------------------------------------------------------------

int cmd_oracle(const std::string& config, const std::string& checkpoint, std::size_t cap, const std::string& out) {
    ExperimentConfig cfg;
    std::vector<ActionId> greedy;
    if (!checkpoint.empty()) {
        const auto ck = read_json_file(checkpoint);
        cfg = experiment_from_json(ck.at("config"));
        greedy = greedy_from_json(ck.at("greedy"));
    } else {
        cfg = load_experiment(config);
    }
    const auto world = make_world(cfg);
    const auto& space = world->space();
    double train_seconds = 0.0;
    if (greedy.empty()) {
        const auto r = run_training(space, cfg.run);
        greedy = r.greedy;
        train_seconds = r.wall_seconds;
    }
    const auto pmdp = materialize(space, cap);
    const auto best = max_sat_probability(pmdp);
    const auto learned = policy_sat_probability(pmdp, deterministic_policy(pmdp, greedy));
    const auto mecs = accepting_mecs(pmdp);
    const std::size_t s0 = pmdp.initial();
    emit({{"experiment", cfg.name},
          {"product_states", pmdp.num_states()},
          {"accepting_mecs", mecs.size()},
          {"max_sat_probability", best[s0]},
          {"learned_sat_probability", learned[s0]},
          {"gap", best[s0] - learned[s0]},
          {"trained", checkpoint.empty()},
          {"train_seconds", train_seconds}},
         out);
    return ok;
}

int fail(int code, const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LTL-constrained Q-learning with biased exploration"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train one run and write returns.csv and checkpoint.json");
    train->add_option("config", ta.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    train->add_option("-o,--out", ta.out_dir, "Output directory");
    train->add_option("--seed", ta.seed);
    train->add_option("--episodes", ta.episodes);
    train->add_option("--policy", ta.policy, "eps_delta_greedy | eps_greedy | boltzmann | ucb1");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Run a multi-policy, multi-seed suite");
    bench->add_option("suite", ba.suite, "Suite JSON")->check(CLI::ExistingFile);
    bench->add_option("--preset", ba.preset, "reference | reach_avoid_1_long | reach_avoid_2_long");
    bench->add_option("-o,--out", ba.out_dir, "Output directory");
    bench->add_option("-j,--workers", ba.workers);
    bench->add_option("--seeds", ba.seeds);
    bench->add_option("--episodes", ba.episodes, "Override every experiment's episode budget");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Oracle checks: policy improvement, bias theorems, distance tables");
    verify->add_option("--trials", va.trials, "Monte-Carlo episodes per arm");
    verify->add_option("--improvement-trials", va.improvement_trials);
    verify->add_option("--automata", va.automata, "Random automata for the distance check");
    verify->add_option("--seed", va.seed);
    verify->add_option("--hoa", va.hoa, "Extra HOA automata for the distance check")->check(CLI::ExistingFile);
    verify->add_option("-o,--out", va.out, "Write the report here instead of stdout");

    std::string source, inspect_out;
    auto* inspect = app.add_subcommand("inspect-automaton", "Dump an automaton with its distance tables");
    inspect->add_option("source", source, "HOA file, experiment JSON or reference task name")->required();
    inspect->add_option("-o,--out", inspect_out);

    std::string ck_path, q_text;
    bool grid_json = false;
    auto* grid = app.add_subcommand("policy-grid", "Greedy action letters of one automaton slice");
    grid->add_option("checkpoint", ck_path)->required()->check(CLI::ExistingFile);
    grid->add_option("q", q_text, "Automaton state index or name")->required();
    grid->add_flag("--json", grid_json);

    std::string oracle_config, oracle_ck, oracle_out;
    std::size_t cap = kDefaultStateCap;
    auto* oracle = app.add_subcommand("oracle", "Learned greedy vs maximal satisfaction probability");
    oracle->add_option("config", oracle_config, "Experiment JSON (trained first)")->check(CLI::ExistingFile);
    oracle->add_option("--checkpoint", oracle_ck, "Use the greedy policy of a checkpoint")->check(CLI::ExistingFile);
    oracle->add_option("--state-cap", cap);
    oracle->add_option("-o,--out", oracle_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(config_error, "usage", e.what());
    }

    try {
        if (*train) return cmd_train(ta);
        if (*bench) return cmd_bench(ba);
        if (*verify) return cmd_verify(va);
        if (*inspect) return cmd_inspect(source, inspect_out);
        if (*grid) return cmd_policy_grid(ck_path, q_text, grid_json);
        if (*oracle) {
            if (oracle_config.empty() && oracle_ck.empty()) throw ConfigError("oracle needs a config or --checkpoint");
            return cmd_oracle(oracle_config, oracle_ck, cap, oracle_out);
        }
    } catch (const VerificationFailed& e) {
        return fail(verification_failure, "verification", e.what());
    } catch (const HypothesisError& e) {
        return fail(verification_failure, "hypothesis", e.what());
    } catch (const ConfigError& e) {
        return fail(config_error, "config", e.what());
    } catch (const HoaParseError& e) {
        return fail(config_error, "hoa_parse", e.what());
    } catch (const HoaSemanticError& e) {
        return fail(config_error, "hoa_semantic", e.what());
    } catch (const AutomatonError& e) {
        return fail(config_error, "automaton", e.what());
    } catch (const UnsatisfiableTask& e) {
        return fail(config_error, "unsatisfiable", e.what());
    } catch (const json::exception& e) {
        return fail(config_error, "json", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(config_error, "invalid_argument", e.what());
    } catch (const std::exception& e) {
        return fail(runtime_error, "runtime", e.what());
    }
    return ok;
}
