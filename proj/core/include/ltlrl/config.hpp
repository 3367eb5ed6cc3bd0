#pragma once

#include "ltlrl/hoa.hpp"
#include "ltlrl/learner.hpp"
#include "ltlrl/mdp.hpp"
#include "ltlrl/patterns.hpp"
#include "ltlrl/product.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

namespace ltlrl {

/// Malformed or inconsistent configuration documents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One experiment: environment, task automaton and run parameters.
///
///   {"name": "...",
///    "environment": {"type": "grid", ...} | {"type": "explicit", ...},
///    "task": {"reference_task": "reach_avoid_1"}
///          | {"pattern": "reach_avoid_stay", "goal": 100, "obstacles": [46]}
///          | {"pattern": "ordered_coverage", "targets": [...], "precedences": [[a, b]], "obstacles": [...]}
///          | {"pattern": "surveillance", "targets": [...], "obstacles": [...], "automaton": "rabin" | "ldba"}
///          | {"hoa": "file.hoa"} | {"hoa_text": "HOA: v1 ..."},
///    "run": {RunConfig fields}}
///
/// Grid environments without "labeled_cells" label every proposition the
/// automaton mentions. Relative HOA paths resolve against `base_dir`.
struct ExperimentConfig {
    std::string name = "experiment";
    nlohmann::json environment = {{"type", "grid"}};
    nlohmann::json task;
    RunConfig run;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {},
                                      RunConfig defaults = {});
/// HOA file references are replaced by their text so the document is self-contained.
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

TaskAutomaton build_task(const nlohmann::json& task);

/// Environment, automaton and product space with stable addresses.
class World {
public:
    World(TaskAutomaton automaton, const nlohmann::json& environment);
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    [[nodiscard]] const TaskAutomaton& automaton() const { return automaton_; }
    [[nodiscard]] const LabeledMdp& mdp() const { return mdp_; }
    [[nodiscard]] const ProductSpace& space() const { return space_; }

private:
    TaskAutomaton automaton_;
    LabeledMdp mdp_;
    ProductSpace space_;
};

std::unique_ptr<World> make_world(const ExperimentConfig& config);

/// The four grid-world experiments with the default run parameters.
ExperimentConfig reference_experiment(const std::string& task_name);

} // namespace ltlrl
