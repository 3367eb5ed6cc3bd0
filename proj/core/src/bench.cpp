#include "ltlrl/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ltlrl {

namespace {

std::vector<PolicyKind> all_policies() {
    return {PolicyKind::eps_delta_greedy, PolicyKind::eps_greedy, PolicyKind::boltzmann, PolicyKind::ucb1};
}

std::vector<PolicyKind> policies_from_json(const nlohmann::json& j) {
    std::vector<PolicyKind> out;
    for (const auto& p : j) out.push_back(policy_kind_from_string(p.get<std::string>()));
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

} // namespace

BenchmarkSuite preset_suite(const std::string& name) {
    BenchmarkSuite s;
    s.name = name;
    if (name == "reference") {
        for (const char* task : {"reach_avoid_1", "reach_avoid_2", "coverage", "surveillance"})
            s.experiments.push_back({reference_experiment(task), all_policies(), {}});
        return s;
    }
    if (name == "reach_avoid_1_long") {
        auto e = reference_experiment("reach_avoid_1");
        e.run.episodes = 5000;
        s.experiments.push_back({e, {PolicyKind::eps_delta_greedy, PolicyKind::boltzmann}, {}});
        s.seeds = {0};
        s.long_running = true;
        return s;
    }
    if (name == "reach_avoid_2_long") {
        auto e = reference_experiment("reach_avoid_2");
        e.run.episodes = 100000;
        s.experiments.push_back({e, {PolicyKind::eps_delta_greedy, PolicyKind::eps_greedy}, {}});
        s.seeds = {0};
        s.long_running = true;
        return s;
    }
    throw ConfigError("unknown preset \"" + name + "\"");
}

BenchmarkSuite suite_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("suite must be an object");
    try {
        BenchmarkSuite s = j.contains("preset") ? preset_suite(j.at("preset").get<std::string>()) : BenchmarkSuite{};
        s.name = j.value("name", s.name);
        if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        s.workers = j.value("workers", s.workers);
        const auto shared = j.value("run", nlohmann::json::object());
        const auto policies = j.contains("policies") ? policies_from_json(j.at("policies")) : all_policies();
        if (j.contains("experiments")) {
            s.experiments.clear();
            for (const auto& e : j.at("experiments")) {
                RunConfig defaults;
                defaults.convergence.enabled = false;
                defaults = run_config_from_json(shared, defaults);
                BenchExperiment x{experiment_from_json(e, base_dir, defaults), policies, {}};
                if (e.contains("policies")) x.policies = policies_from_json(e.at("policies"));
                if (e.contains("policy_overrides"))
                    for (const auto& [k, v] : e.at("policy_overrides").items()) x.overrides[policy_kind_from_string(k)] = v;
                s.experiments.push_back(std::move(x));
            }
        } else if (!shared.empty()) {
            for (auto& x : s.experiments) x.base.run = run_config_from_json(shared, x.base.run);
        }
        if (s.seeds.empty()) throw ConfigError("suite has no seeds");
        for (const auto& x : s.experiments) {
            if (x.policies.empty()) throw ConfigError("experiment \"" + x.base.name + "\" names no policy");
            for (const auto& [k, v] : x.overrides) cell_config(x, k, 0);
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("suite: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("suite: ") + e.what());
    }
}

RunConfig cell_config(const BenchExperiment& experiment, PolicyKind policy, std::uint64_t seed) {
    RunConfig c = experiment.base.run;
    if (auto it = experiment.overrides.find(policy); it != experiment.overrides.end())
        c = run_config_from_json(it->second, c);
    c.policy = policy;
    c.seed = seed;
    return c;
}

CurveAggregate aggregate(const std::vector<const RunRecord*>& runs) {
    CurveAggregate a;
    std::vector<const RunRecord*> ok;
    for (const auto* r : runs)
        if (!r->error) ok.push_back(r);
    if (ok.empty()) return a;
    a.experiment = ok.front()->experiment;
    a.policy = ok.front()->policy;
    a.runs = ok.size();
    std::size_t len = ok.front()->returns.size();
    for (const auto* r : ok) len = std::min(len, r->returns.size());
    a.mean.assign(len, 0.0);
    for (std::size_t e = 0; e < len; ++e) {
        for (const auto* r : ok) a.mean[e] += r->returns[e];
        a.mean[e] /= static_cast<double>(ok.size());
    }
    if (ok.size() >= 2) {
        a.variance.assign(len, 0.0);
        for (std::size_t e = 0; e < len; ++e) {
            for (const auto* r : ok) a.variance[e] += (r->returns[e] - a.mean[e]) * (r->returns[e] - a.mean[e]);
            a.variance[e] /= static_cast<double>(ok.size() - 1);
        }
    }
    return a;
}

PolicySummary summarize(const std::vector<const RunRecord*>& runs, std::size_t episodes) {
    PolicySummary s;
    const auto agg = aggregate(runs);
    s.runs = agg.runs;
    for (const auto* r : runs)
        if (r->error) s.errors.push_back("seed " + std::to_string(r->seed) + ": " + *r->error);
    if (!agg.mean.empty()) {
        s.final_mean = agg.mean.back();
        s.final_variance = agg.variance.empty() ? 0.0 : agg.variance.back();
        s.auc = std::accumulate(agg.mean.begin(), agg.mean.end(), 0.0) / static_cast<double>(agg.mean.size());
    }
    double sum = 0.0;
    bool any = false;
    for (const auto* r : runs) {
        if (r->error) continue;
        std::optional<std::size_t> first;
        for (std::size_t e = 0; e < r->goal_rewards.size(); ++e)
            if (r->goal_rewards[e] > 0) {
                first = e;
                break;
            }
        s.first_nonzero_per_run.push_back(first);
        s.total_goal_rewards += std::accumulate(r->goal_rewards.begin(), r->goal_rewards.end(), std::uint64_t{0});
        if (first) {
            any = true;
            if (!s.first_nonzero_reward_episode_min || *first < *s.first_nonzero_reward_episode_min)
                s.first_nonzero_reward_episode_min = first;
        }
        sum += static_cast<double>(first.value_or(episodes));
    }
    if (any) s.first_nonzero_reward_episode = sum / static_cast<double>(s.first_nonzero_per_run.size());
    return s;
}

SuiteResult run_suite(const BenchmarkSuite& suite) {
    const auto start = std::chrono::steady_clock::now();
    struct Cell {
        std::size_t experiment;
        PolicyKind policy;
        std::uint64_t seed;
        bool first_seed;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < suite.experiments.size(); ++i)
        for (PolicyKind p : suite.experiments[i].policies)
            for (std::size_t k = 0; k < suite.seeds.size(); ++k) cells.push_back({i, p, suite.seeds[k], k == 0});

    // worlds are immutable once built and shared by every cell of an experiment
    std::vector<std::unique_ptr<World>> worlds(suite.experiments.size());
    std::vector<std::optional<std::string>> world_errors(suite.experiments.size());
    for (std::size_t i = 0; i < worlds.size(); ++i) {
        try {
            worlds[i] = make_world(suite.experiments[i].base);
        } catch (const std::exception& e) {
            world_errors[i] = e.what();
        }
    }

    SuiteResult result;
    result.runs.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            const Cell& c = cells[k];
            RunRecord& rec = result.runs[k];
            const auto& ex = suite.experiments[c.experiment];
            rec.experiment = ex.base.name;
            rec.policy = c.policy;
            rec.seed = c.seed;
            if (world_errors[c.experiment]) {
                rec.error = *world_errors[c.experiment];
                continue;
            }
            try {
                const auto& space = worlds[c.experiment]->space();
                const auto r = run_training(space, cell_config(ex, c.policy, c.seed));
                rec.returns = r.returns;
                rec.goal_rewards = r.goal_rewards;
                rec.wall_seconds = r.wall_seconds;
                if (c.first_seed) {
                    nlohmann::json slices = nlohmann::json::array();
                    for (std::size_t q = 0; q < space.num_automaton_states(); ++q) {
                        const auto aq = static_cast<AutState>(q);
                        rec.policy_grid.push_back("q=" + std::to_string(q));
                        for (auto& row : policy_grid(space, r.greedy, aq)) rec.policy_grid.push_back(row);
                        slices.push_back(policy_grid_json(space, r.greedy, aq));
                    }
                    rec.policy_grid_json = std::move(slices);
                }
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
    };
    std::size_t workers = suite.workers ? suite.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(cells.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string curves_csv(const SuiteResult& result) {
    std::string out = "experiment,policy,seed,episode,discounted_return\n";
    for (const auto& r : result.runs) {
        const std::string prefix = r.experiment + "," + to_string(r.policy) + "," + std::to_string(r.seed) + ",";
        for (std::size_t e = 0; e < r.returns.size(); ++e)
            out += prefix + std::to_string(e) + "," + format_double(r.returns[e]) + "\n";
    }
    return out;
}

std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> parse_curves_csv(
    const std::string& text) {
    std::map<std::pair<std::string, std::string>, std::vector<std::vector<double>>> out;
    std::map<std::pair<std::string, std::string>, std::string> last_seed;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 5) throw std::runtime_error("malformed curves row: " + line);
        const auto key = std::make_pair(f[0], f[1]);
        auto& runs = out[key];
        if (runs.empty() || last_seed[key] != f[2]) {
            runs.emplace_back();
            last_seed[key] = f[2];
        }
        runs.back().push_back(std::stod(f[4]));
    }
    return out;
}

nlohmann::json suite_summary(const BenchmarkSuite& suite, const SuiteResult& result) {
    nlohmann::json experiments = nlohmann::json::array();
    for (const auto& ex : suite.experiments) {
        nlohmann::json policies = nlohmann::json::object();
        std::vector<std::pair<double, std::string>> by_final, by_auc;
        for (PolicyKind p : ex.policies) {
            std::vector<const RunRecord*> runs;
            for (const auto& r : result.runs)
                if (r.experiment == ex.base.name && r.policy == p) runs.push_back(&r);
            const auto s = summarize(runs, ex.base.run.episodes);
            nlohmann::json per_run = nlohmann::json::array();
            for (const auto& f : s.first_nonzero_per_run) per_run.push_back(f ? nlohmann::json(*f) : nlohmann::json());
            const auto cfg = cell_config(ex, p, 0);
            policies[to_string(p)] = {
                {"final_mean", s.final_mean},
                {"final_variance", s.final_variance},
                {"auc", s.auc},
                {"first_nonzero_reward_episode",
                 s.first_nonzero_reward_episode ? nlohmann::json(*s.first_nonzero_reward_episode) : nlohmann::json()},
                {"first_nonzero_reward_episode_min", s.first_nonzero_reward_episode_min
                                                         ? nlohmann::json(*s.first_nonzero_reward_episode_min)
                                                         : nlohmann::json()},
                {"first_nonzero_reward_episode_per_run", per_run},
                {"total_goal_rewards", s.total_goal_rewards},
                {"runs", s.runs},
                {"errors", s.errors},
                {"schedule", to_json(cfg.schedule)},
            };
            if (s.runs) {
                by_final.push_back({s.final_mean, to_string(p)});
                by_auc.push_back({s.auc, to_string(p)});
            }
        }
        auto ranking = [](std::vector<std::pair<double, std::string>> v) {
            std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
            std::vector<std::string> names;
            for (auto& [_, n] : v) names.push_back(n);
            return names;
        };
        auto run = to_json(ex.base.run);
        run.erase("policy");
        run.erase("seed");
        experiments.push_back({{"name", ex.base.name},
                               {"environment", ex.base.environment},
                               {"task", ex.base.task},
                               {"run", run},
                               {"policies", policies},
                               {"ranking_by_final_mean", ranking(by_final)},
                               {"ranking_by_auc", ranking(by_auc)}});
    }
    return {{"suite", suite.name},
            {"seeds", suite.seeds},
            {"metrics",
             {{"final_mean", "mean over seeds of the discounted return of the last episode"},
              {"auc", "mean over episodes of the seed-mean discounted return"},
              {"first_nonzero_reward_episode",
               "mean over seeds of the first episode with a positive reward (runs without one count as the "
               "episode budget)"},
              {"first_nonzero_reward_episode_min", "earliest such episode over seeds"}}},
            {"experiments", experiments}};
}

nlohmann::json write_suite_outputs(const BenchmarkSuite& suite, const SuiteResult& result,
                                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "curves.csv", curves_csv(result));

    std::string rewards = "experiment,policy,seed,episode,goal_rewards\n";
    for (const auto& r : result.runs) {
        const std::string prefix = r.experiment + "," + to_string(r.policy) + "," + std::to_string(r.seed) + ",";
        for (std::size_t e = 0; e < r.goal_rewards.size(); ++e)
            rewards += prefix + std::to_string(e) + "," + std::to_string(r.goal_rewards[e]) + "\n";
    }
    write_file(dir / "goal_rewards.csv", rewards);

    std::string agg = "experiment,policy,episode,mean,variance\n";
    nlohmann::json grids = nlohmann::json::object();
    std::string grid_text;
    for (const auto& ex : suite.experiments)
        for (PolicyKind p : ex.policies) {
            std::vector<const RunRecord*> runs;
            for (const auto& r : result.runs)
                if (r.experiment == ex.base.name && r.policy == p) runs.push_back(&r);
            const auto a = aggregate(runs);
            for (std::size_t e = 0; e < a.mean.size(); ++e)
                agg += ex.base.name + "," + to_string(p) + "," + std::to_string(e) + "," + format_double(a.mean[e]) +
                       "," + (a.variance.empty() ? std::string() : format_double(a.variance[e])) + "\n";
            for (const auto* r : runs) {
                if (r->policy_grid.empty()) continue;
                grid_text += "# " + ex.base.name + " " + to_string(p) + " seed " + std::to_string(r->seed) + "\n";
                for (const auto& line : r->policy_grid) grid_text += line + "\n";
                grids[ex.base.name][to_string(p)] = {{"seed", r->seed}, {"slices", r->policy_grid_json}};
            }
        }
    write_file(dir / "aggregate.csv", agg);
    write_file(dir / "policy_grid.txt", grid_text);
    write_file(dir / "policy_grid.json", grids.dump(2) + "\n");
    auto summary = suite_summary(suite, result);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

} // namespace ltlrl
