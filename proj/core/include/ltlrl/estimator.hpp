#pragma once

#include "ltlrl/mdp.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

namespace ltlrl {

/// Read access to a transition kernel, estimated or true. The bias machinery
/// works against this interface so it can run on either.
class KernelView {
public:
    virtual ~KernelView() = default;
    [[nodiscard]] virtual std::size_t num_states() const = 0;
    [[nodiscard]] virtual std::size_t num_actions(MdpState x) const = 0;
    [[nodiscard]] virtual double prob(MdpState x, ActionId a, MdpState y) const = 0;
    /// { y : exists a, P(x,a,y) > 0 }, sorted.
    [[nodiscard]] virtual const std::vector<MdpState>& successors(MdpState x) const = 0;
    /// Bumped whenever successors() of some state grows.
    [[nodiscard]] virtual std::uint64_t support_version() const = 0;
    /// Bumped whenever any probability may have changed.
    [[nodiscard]] virtual std::uint64_t value_version() const = 0;
};

/// Maximum-likelihood kernel estimate from integer visit counts:
/// P-hat(x,a,y) = c(x,a,y) / n(x,a), and 0 on unvisited rows.
class EstimatedModel final : public KernelView {
public:
    EstimatedModel() = default;
    /// One row per (x, a) with a < action_counts[x].
    explicit EstimatedModel(std::vector<std::size_t> action_counts);
    explicit EstimatedModel(const LabeledMdp& mdp);

    void record(MdpState x, ActionId a, MdpState y);

    [[nodiscard]] std::uint64_t visits(MdpState x, ActionId a) const { return n_.at(row_index(x, a)); }
    [[nodiscard]] std::uint64_t count(MdpState x, ActionId a, MdpState y) const;
    /// (successor, count) pairs of row (x, a), sorted by successor.
    [[nodiscard]] const std::vector<std::pair<MdpState, std::uint64_t>>& counts(MdpState x, ActionId a) const {
        return c_.at(row_index(x, a));
    }

    [[nodiscard]] std::size_t num_states() const override { return action_counts_.size(); }
    [[nodiscard]] std::size_t num_actions(MdpState x) const override { return action_counts_.at(x); }
    [[nodiscard]] double prob(MdpState x, ActionId a, MdpState y) const override;
    [[nodiscard]] const std::vector<MdpState>& successors(MdpState x) const override { return support_.at(x); }
    [[nodiscard]] std::uint64_t support_version() const override { return support_version_; }
    [[nodiscard]] std::uint64_t value_version() const override { return records_; }
    [[nodiscard]] std::uint64_t total_records() const { return records_; }

private:
    [[nodiscard]] std::size_t row_index(MdpState x, ActionId a) const;

    std::vector<std::size_t> action_counts_;
    std::vector<std::size_t> row_begin_;
    std::vector<std::uint64_t> n_;
    std::vector<std::vector<std::pair<MdpState, std::uint64_t>>> c_;
    std::vector<std::vector<MdpState>> support_;
    std::uint64_t support_version_ = 0;
    std::uint64_t records_ = 0;
};

/// The true kernel behind the KernelView interface (for theorem checks that
/// condition on P rather than P-hat).
class TrueKernel final : public KernelView {
public:
    explicit TrueKernel(const LabeledMdp& mdp);

    [[nodiscard]] std::size_t num_states() const override { return mdp_->size(); }
    [[nodiscard]] std::size_t num_actions(MdpState x) const override { return mdp_->num_actions(x); }
    [[nodiscard]] double prob(MdpState x, ActionId a, MdpState y) const override { return mdp_->prob(x, a, y); }
    [[nodiscard]] const std::vector<MdpState>& successors(MdpState x) const override { return support_.at(x); }
    [[nodiscard]] std::uint64_t support_version() const override { return 0; }
    [[nodiscard]] std::uint64_t value_version() const override { return 0; }

private:
    const LabeledMdp* mdp_;
    std::vector<std::vector<MdpState>> support_;
};

/// R(x): states reachable in one hop under the view.
std::vector<MdpState> reachable_one_hop(const KernelView& model, MdpState x);

enum class GraphWeighting { unit, reciprocal };

struct WeightedEdge {
    MdpState target = 0;
    double weight = 1.0;
};

/// Learned graph: edge x->y iff some action has P(x,a,y) > 0, weight 1 or
/// 1 / max_a P(x,a,y).
std::vector<std::vector<WeightedEdge>> learned_graph(const KernelView& model, GraphWeighting weighting);

double edge_weight(const KernelView& model, MdpState x, MdpState y, GraphWeighting weighting);

/// {"action_counts": [...], "rows": [[x, a, [[y, c], ...]], ...]}; only
/// visited rows are listed.
nlohmann::json to_json(const EstimatedModel& model);
EstimatedModel estimated_model_from_json(const nlohmann::json& j);

} // namespace ltlrl
