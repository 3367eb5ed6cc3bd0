#pragma once

#include "ltlrl/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltlrl {

class MdpError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Transition {
    MdpState target = 0;
    double prob = 0.0;
};

struct GridWorldSpec;

/// Rows of a kernel indexed [state][action]; each row lists its successors.
using KernelRows = std::vector<std::vector<std::vector<Transition>>>;

/// Finite labeled MDP. This is the ground truth the learner never reads
/// directly; it only samples from it.
class LabeledMdp {
public:
    /// Validates probabilities, row sums (1e-9), and that every label asserts
    /// at most one proposition. Duplicate targets in a row are merged.
    LabeledMdp(MdpState initial, const KernelRows& rows, std::vector<Symbol> labels,
               std::vector<std::string> action_names = {});

    [[nodiscard]] std::size_t size() const { return labels_.size(); }
    [[nodiscard]] MdpState initial() const { return initial_; }
    [[nodiscard]] std::size_t num_actions(MdpState x) const { return row_begin_.at(x + 1) - row_begin_.at(x); }
    [[nodiscard]] std::size_t max_actions() const { return max_actions_; }
    [[nodiscard]] std::span<const Transition> row(MdpState x, ActionId a) const;
    [[nodiscard]] double prob(MdpState x, ActionId a, MdpState y) const;
    [[nodiscard]] const Symbol& label(MdpState x) const { return labels_.at(x); }
    [[nodiscard]] const std::vector<Symbol>& labels() const { return labels_; }
    [[nodiscard]] std::string action_name(ActionId a) const;
    [[nodiscard]] const std::vector<std::string>& action_names() const { return action_names_; }

    /// Grid geometry when built by build_gridworld, else 0.
    [[nodiscard]] int grid_width() const { return width_; }
    [[nodiscard]] int grid_height() const { return height_; }

private:
    friend LabeledMdp build_gridworld(const GridWorldSpec&);

    MdpState initial_;
    std::vector<std::size_t> row_begin_;    // per state, index of its first row
    std::vector<std::size_t> entry_begin_;  // per row, index of its first entry
    std::vector<Transition> entries_;
    std::vector<Symbol> labels_;
    std::vector<std::string> action_names_;
    std::size_t max_actions_ = 0;
    int width_ = 0;
    int height_ = 0;
};

namespace grid {
enum Action : ActionId { left = 0, right = 1, up = 2, down = 3, idle = 4 };
} // namespace grid

/// Cells are numbered 1..width*height row-major from the top-left corner;
/// cell c is MDP state c-1 and is labeled with proposition c when listed in
/// `labeled_cells`.
struct GridWorldSpec {
    int width = 10;
    int height = 10;
    double p_intended = 0.7;
    std::vector<PropId> labeled_cells;
    PropId initial_cell = 1;
};

/// Five actions per cell. The intended outcome gets p_intended; each of the
/// other four outcomes among {stay, left, right, up, down} gets a quarter of
/// the rest. Outcomes leaving the grid stay put.
LabeledMdp build_gridworld(const GridWorldSpec& spec);

inline MdpState cell_state(PropId cell) { return static_cast<MdpState>(cell - 1); }
inline PropId state_cell(MdpState x) { return static_cast<PropId>(x + 1); }

/// Draws x' ~ P(x, a, .). Consumes exactly one uniform draw.
MdpState sample_step(const LabeledMdp& mdp, MdpState x, ActionId a, Rng& rng);

const Symbol& label_of(const LabeledMdp& mdp, MdpState x);

/// Environment files: {"type":"grid", width, height, p_intended,
/// labeled_cells, initial_cell} or {"type":"explicit", initial, actions,
/// rows: [[[[target, prob], ...] per action] per state], labels}.
GridWorldSpec grid_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridWorldSpec& spec);
LabeledMdp mdp_from_json(const nlohmann::json& j);
/// Explicit form; round-trips through mdp_from_json.
nlohmann::json to_json(const LabeledMdp& mdp);

} // namespace ltlrl
