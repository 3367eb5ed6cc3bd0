#include "ltlrl/mdp.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace ltlrl {

LabeledMdp::LabeledMdp(MdpState initial, const KernelRows& rows, std::vector<Symbol> labels,
                       std::vector<std::string> action_names)
    : initial_(initial), labels_(std::move(labels)), action_names_(std::move(action_names)) {
    const std::size_t n = rows.size();
    if (n == 0) throw MdpError("MDP has no states");
    if (labels_.size() != n) throw MdpError("label count does not match state count");
    if (initial_ < 0 || static_cast<std::size_t>(initial_) >= n) throw MdpError("initial state out of range");
    row_begin_.push_back(0);
    entry_begin_.push_back(0);
    for (std::size_t x = 0; x < n; ++x) {
        if (labels_[x].size() > 1)
            throw MdpError("state " + std::to_string(x) + " asserts more than one proposition");
        max_actions_ = std::max(max_actions_, rows[x].size());
        for (std::size_t a = 0; a < rows[x].size(); ++a) {
            std::map<MdpState, double> merged;
            double sum = 0.0;
            for (const auto& t : rows[x][a]) {
                if (t.target < 0 || static_cast<std::size_t>(t.target) >= n)
                    throw MdpError("transition target out of range at state " + std::to_string(x));
                if (!(t.prob >= 0.0 && t.prob <= 1.0))
                    throw MdpError("probability outside [0,1] at state " + std::to_string(x));
                merged[t.target] += t.prob;
                sum += t.prob;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw MdpError("row (" + std::to_string(x) + "," + std::to_string(a) + ") sums to " +
                               std::to_string(sum));
            for (auto [y, p] : merged)
                if (p > 0.0) entries_.push_back({y, p});
            entry_begin_.push_back(entries_.size());
        }
        row_begin_.push_back(entry_begin_.size() - 1);
    }
    if (!action_names_.empty() && action_names_.size() != max_actions_)
        throw MdpError("action name count does not match the action count");
}

std::span<const Transition> LabeledMdp::row(MdpState x, ActionId a) const {
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions(x))
        throw MdpError("action " + std::to_string(a) + " not available at state " + std::to_string(x));
    const std::size_t r = row_begin_[x] + static_cast<std::size_t>(a);
    return {entries_.data() + entry_begin_[r], entry_begin_[r + 1] - entry_begin_[r]};
}

double LabeledMdp::prob(MdpState x, ActionId a, MdpState y) const {
    for (const auto& t : row(x, a))
        if (t.target == y) return t.prob;
    return 0.0;
}

std::string LabeledMdp::action_name(ActionId a) const {
    if (a >= 0 && static_cast<std::size_t>(a) < action_names_.size()) return action_names_[a];
    return "a" + std::to_string(a);
}

LabeledMdp build_gridworld(const GridWorldSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw MdpError("grid must have at least one cell");
    if (!(spec.p_intended > 0.0 && spec.p_intended <= 1.0)) throw MdpError("p_intended must lie in (0,1]");
    const int w = spec.width;
    const int h = spec.height;
    const int cells = w * h;
    auto check_cell = [&](PropId c, const char* what) {
        if (c < 1 || c > cells)
            throw MdpError(std::string(what) + " " + std::to_string(c) + " is outside the " + std::to_string(w) +
                           "x" + std::to_string(h) + " grid");
    };
    check_cell(spec.initial_cell, "initial cell");
    std::vector<Symbol> labels(static_cast<std::size_t>(cells));
    for (PropId c : spec.labeled_cells) {
        check_cell(c, "labeled cell");
        labels[cell_state(c)] = Symbol::single(c);
    }

    // outcome order: stay, left, right, up, down; action k intends outcome k+1,
    // idle intends outcome 0
    constexpr int dr[5] = {0, 0, 0, -1, 1};
    constexpr int dc[5] = {0, -1, 1, 0, 0};
    constexpr int intended[5] = {1, 2, 3, 4, 0};
    const double rest = (1.0 - spec.p_intended) / 4.0;

    KernelRows rows(static_cast<std::size_t>(cells));
    for (int x = 0; x < cells; ++x) {
        const int r = x / w;
        const int c = x % w;
        for (int a = 0; a < 5; ++a) {
            std::map<MdpState, double> row;
            for (int o = 0; o < 5; ++o) {
                const int nr = r + dr[o];
                const int nc = c + dc[o];
                const bool inside = nr >= 0 && nr < h && nc >= 0 && nc < w;
                const MdpState y = inside ? nr * w + nc : x;
                row[y] += (o == intended[a]) ? spec.p_intended : rest;
            }
            std::vector<Transition> out;
            for (auto [y, p] : row)
                if (p > 0.0) out.push_back({y, p});
            rows[x].push_back(std::move(out));
        }
    }
    LabeledMdp mdp(cell_state(spec.initial_cell), rows, std::move(labels), {"left", "right", "up", "down", "idle"});
    mdp.width_ = w;
    mdp.height_ = h;
    return mdp;
}

MdpState sample_step(const LabeledMdp& mdp, MdpState x, ActionId a, Rng& rng) {
    const auto row = mdp.row(x, a);
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& t : row) {
        acc += t.prob;
        if (u < acc) return t.target;
    }
    return row.back().target;
}

const Symbol& label_of(const LabeledMdp& mdp, MdpState x) { return mdp.label(x); }

GridWorldSpec grid_spec_from_json(const nlohmann::json& j) {
    GridWorldSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.p_intended = j.value("p_intended", s.p_intended);
    s.labeled_cells = j.value("labeled_cells", s.labeled_cells);
    s.initial_cell = j.value("initial_cell", s.initial_cell);
    return s;
}

nlohmann::json to_json(const GridWorldSpec& s) {
    return {{"type", "grid"},
            {"width", s.width},
            {"height", s.height},
            {"p_intended", s.p_intended},
            {"labeled_cells", s.labeled_cells},
            {"initial_cell", s.initial_cell}};
}

LabeledMdp mdp_from_json(const nlohmann::json& j) {
    const std::string type = j.value("type", "grid");
    if (type == "grid") return build_gridworld(grid_spec_from_json(j));
    if (type != "explicit") throw MdpError("unknown environment type \"" + type + "\"");
    KernelRows rows;
    for (const auto& state : j.at("rows")) {
        std::vector<std::vector<Transition>> acts;
        for (const auto& act : state) {
            std::vector<Transition> row;
            for (const auto& e : act) row.push_back({e.at(0).get<MdpState>(), e.at(1).get<double>()});
            acts.push_back(std::move(row));
        }
        rows.push_back(std::move(acts));
    }
    std::vector<Symbol> labels(rows.size());
    if (j.contains("labels")) {
        const auto& l = j.at("labels");
        if (l.size() != rows.size()) throw MdpError("label count does not match state count");
        for (std::size_t x = 0; x < rows.size(); ++x) labels[x] = Symbol(l[x].get<std::vector<PropId>>());
    }
    return LabeledMdp(j.value("initial", 0), rows, std::move(labels),
                      j.value("actions", std::vector<std::string>{}));
}

nlohmann::json to_json(const LabeledMdp& mdp) {
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json labels = nlohmann::json::array();
    for (std::size_t x = 0; x < mdp.size(); ++x) {
        const auto xs = static_cast<MdpState>(x);
        nlohmann::json acts = nlohmann::json::array();
        for (std::size_t a = 0; a < mdp.num_actions(xs); ++a) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& t : mdp.row(xs, static_cast<ActionId>(a))) row.push_back({t.target, t.prob});
            acts.push_back(std::move(row));
        }
        rows.push_back(std::move(acts));
        labels.push_back(mdp.label(xs).props());
    }
    return {{"type", "explicit"},
            {"initial", mdp.initial()},
            {"actions", mdp.action_names()},
            {"rows", std::move(rows)},
            {"labels", std::move(labels)}};
}

} // namespace ltlrl
