#include "ltlrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ltlrl {

namespace {

std::vector<PropId> props(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return {};
    return j.at(key).get<std::vector<PropId>>();
}

std::vector<PropId> automaton_aps(const TaskAutomaton& a) {
    return std::visit([](const auto& x) { return x.aps(); }, a);
}

LabeledMdp build_environment(const nlohmann::json& env, const TaskAutomaton& automaton) {
    if (!env.is_object()) throw ConfigError("environment must be an object");
    const std::string type = env.value("type", "grid");
    if (type != "grid") return mdp_from_json(env);
    GridWorldSpec spec = grid_spec_from_json(env);
    if (!env.contains("labeled_cells")) spec.labeled_cells = automaton_aps(automaton);
    return build_gridworld(spec);
}

ProductSpace make_space(const LabeledMdp& mdp, const TaskAutomaton& automaton) {
    return std::visit([&](const auto& a) { return ProductSpace(mdp, a); }, automaton);
}

} // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TaskAutomaton build_task(const nlohmann::json& task) {
    if (!task.is_object()) throw ConfigError("task must be an object");
    if (task.contains("hoa_text")) {
        std::map<std::string, PropId> names;
        if (task.contains("propositions")) names = task.at("propositions").get<std::map<std::string, PropId>>();
        return parse_hoa(task.at("hoa_text").get<std::string>(), names);
    }
    if (task.contains("hoa")) throw ConfigError("HOA file references must be resolved before building the task");
    if (task.contains("reference_task")) {
        const auto name = task.at("reference_task").get<std::string>();
        if (name == "reach_avoid_1") return build_pattern_automaton(reference_tasks::reach_avoid_1());
        if (name == "reach_avoid_2") return build_pattern_automaton(reference_tasks::reach_avoid_2());
        if (name == "coverage") return build_pattern_automaton(reference_tasks::coverage());
        if (name == "surveillance") {
            if (task.value("automaton", "rabin") == "ldba") return build_pattern_ldba(reference_tasks::surveillance());
            return build_pattern_automaton(reference_tasks::surveillance());
        }
        throw ConfigError("unknown reference task \"" + name + "\"");
    }
    const std::string pattern = task.value("pattern", "");
    if (pattern == "reach_avoid_stay")
        return build_pattern_automaton(ReachAvoidStay{task.at("goal").get<PropId>(), props(task, "obstacles")});
    if (pattern == "ordered_coverage") {
        OrderedCoverage c{props(task, "targets"), {}, props(task, "obstacles")};
        if (task.contains("precedences"))
            for (const auto& p : task.at("precedences")) c.precedences.push_back({p.at(0).get<PropId>(), p.at(1).get<PropId>()});
        return build_pattern_automaton(c);
    }
    if (pattern == "surveillance") {
        Surveillance s{props(task, "targets"), props(task, "obstacles")};
        const std::string kind = task.value("automaton", "rabin");
        if (kind == "ldba") return build_pattern_ldba(s);
        if (kind != "rabin") throw ConfigError("surveillance automaton must be \"rabin\" or \"ldba\"");
        return build_pattern_automaton(s);
    }
    throw ConfigError("task needs one of \"reference_task\", \"pattern\", \"hoa\" or \"hoa_text\"");
}

ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                      RunConfig defaults) {
    if (!j.is_object()) throw ConfigError("experiment must be an object");
    ExperimentConfig c;
    try {
        c.name = j.value("name", c.name);
        if (j.contains("environment")) c.environment = j.at("environment");
        if (!j.contains("task")) throw ConfigError("experiment \"" + c.name + "\" has no task");
        c.task = j.at("task");
        if (c.task.contains("hoa")) {
            std::filesystem::path p = c.task.at("hoa").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            c.task["hoa_text"] = read_text_file(p);
            c.task.erase("hoa");
        }
        c.run = j.contains("run") ? run_config_from_json(j.at("run"), std::move(defaults)) : std::move(defaults);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(c.name + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(c.name + ": " + e.what());
    }
    return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"name", c.name}, {"environment", c.environment}, {"task", c.task}, {"run", to_json(c.run)}};
}

World::World(TaskAutomaton automaton, const nlohmann::json& environment)
    : automaton_(std::move(automaton)),
      mdp_(build_environment(environment, automaton_)),
      space_(make_space(mdp_, automaton_)) {}

std::unique_ptr<World> make_world(const ExperimentConfig& config) {
    try {
        return std::make_unique<World>(build_task(config.task), config.environment);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config.name + ": " + e.what());
    }
}

ExperimentConfig reference_experiment(const std::string& task_name) {
    static const std::set<std::string> known{"reach_avoid_1", "reach_avoid_2", "coverage", "surveillance"};
    if (!known.count(task_name)) throw ConfigError("unknown reference task \"" + task_name + "\"");
    ExperimentConfig c;
    c.name = task_name;
    c.environment = to_json(GridWorldSpec{});
    c.environment.erase("labeled_cells");
    c.task = {{"reference_task", task_name}};
    c.run.convergence.enabled = false;
    return c;
}

} // namespace ltlrl
