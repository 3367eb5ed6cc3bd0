#include "ltlrl/estimator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace ltlrl {

namespace {

std::vector<std::size_t> action_counts_of(const LabeledMdp& mdp) {
    std::vector<std::size_t> out(mdp.size());
    for (std::size_t x = 0; x < mdp.size(); ++x) out[x] = mdp.num_actions(static_cast<MdpState>(x));
    return out;
}

} // namespace

EstimatedModel::EstimatedModel(std::vector<std::size_t> action_counts)
    : action_counts_(std::move(action_counts)), support_(action_counts_.size()) {
    row_begin_.reserve(action_counts_.size() + 1);
    row_begin_.push_back(0);
    for (auto m : action_counts_) row_begin_.push_back(row_begin_.back() + m);
    n_.assign(row_begin_.back(), 0);
    c_.resize(row_begin_.back());
}

EstimatedModel::EstimatedModel(const LabeledMdp& mdp) : EstimatedModel(action_counts_of(mdp)) {}

std::size_t EstimatedModel::row_index(MdpState x, ActionId a) const {
    if (x < 0 || static_cast<std::size_t>(x) >= action_counts_.size())
        throw std::out_of_range("state " + std::to_string(x) + " out of range");
    if (a < 0 || static_cast<std::size_t>(a) >= action_counts_[x])
        throw std::out_of_range("action " + std::to_string(a) + " out of range at state " + std::to_string(x));
    return row_begin_[x] + static_cast<std::size_t>(a);
}

void EstimatedModel::record(MdpState x, ActionId a, MdpState y) {
    const auto r = row_index(x, a);
    if (y < 0 || static_cast<std::size_t>(y) >= action_counts_.size())
        throw std::out_of_range("successor " + std::to_string(y) + " out of range");
    ++n_[r];
    ++records_;
    auto& row = c_[r];
    auto it = std::lower_bound(row.begin(), row.end(), y, [](const auto& e, MdpState v) { return e.first < v; });
    if (it != row.end() && it->first == y) {
        ++it->second;
        return;
    }
    row.insert(it, {y, 1});
    auto& sup = support_[x];
    auto jt = std::lower_bound(sup.begin(), sup.end(), y);
    if (jt == sup.end() || *jt != y) {
        sup.insert(jt, y);
        ++support_version_;
    }
}

std::uint64_t EstimatedModel::count(MdpState x, ActionId a, MdpState y) const {
    for (const auto& [t, c] : c_[row_index(x, a)])
        if (t == y) return c;
    return 0;
}

double EstimatedModel::prob(MdpState x, ActionId a, MdpState y) const {
    const auto r = row_index(x, a);
    if (n_[r] == 0) return 0.0;
    for (const auto& [t, c] : c_[r])
        if (t == y) return static_cast<double>(c) / static_cast<double>(n_[r]);
    return 0.0;
}

TrueKernel::TrueKernel(const LabeledMdp& mdp) : mdp_(&mdp), support_(mdp.size()) {
    for (std::size_t x = 0; x < mdp.size(); ++x) {
        auto& sup = support_[x];
        for (std::size_t a = 0; a < mdp.num_actions(static_cast<MdpState>(x)); ++a)
            for (const auto& t : mdp.row(static_cast<MdpState>(x), static_cast<ActionId>(a)))
                if (t.prob > 0.0) sup.push_back(t.target);
        std::sort(sup.begin(), sup.end());
        sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
    }
}

std::vector<MdpState> reachable_one_hop(const KernelView& model, MdpState x) { return model.successors(x); }

double edge_weight(const KernelView& model, MdpState x, MdpState y, GraphWeighting weighting) {
    if (weighting == GraphWeighting::unit) return 1.0;
    double best = 0.0;
    for (std::size_t a = 0; a < model.num_actions(x); ++a)
        best = std::max(best, model.prob(x, static_cast<ActionId>(a), y));
    return best > 0.0 ? 1.0 / best : 0.0;
}

std::vector<std::vector<WeightedEdge>> learned_graph(const KernelView& model, GraphWeighting weighting) {
    std::vector<std::vector<WeightedEdge>> g(model.num_states());
    for (std::size_t x = 0; x < g.size(); ++x) {
        const auto xs = static_cast<MdpState>(x);
        for (MdpState y : model.successors(xs)) g[x].push_back({y, edge_weight(model, xs, y, weighting)});
    }
    return g;
}

nlohmann::json to_json(const EstimatedModel& model) {
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::size_t> counts(model.num_states());
    for (std::size_t x = 0; x < model.num_states(); ++x) {
        const auto xs = static_cast<MdpState>(x);
        counts[x] = model.num_actions(xs);
        for (std::size_t a = 0; a < counts[x]; ++a) {
            const auto& row = model.counts(xs, static_cast<ActionId>(a));
            if (row.empty()) continue;
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& [y, c] : row) entries.push_back({y, c});
            rows.push_back({x, a, std::move(entries)});
        }
    }
    return {{"action_counts", counts}, {"rows", std::move(rows)}};
}

EstimatedModel estimated_model_from_json(const nlohmann::json& j) {
    EstimatedModel m(j.at("action_counts").get<std::vector<std::size_t>>());
    for (const auto& row : j.at("rows")) {
        const auto x = row.at(0).get<MdpState>();
        const auto a = row.at(1).get<ActionId>();
        for (const auto& e : row.at(2)) {
            const auto y = e.at(0).get<MdpState>();
            const auto c = e.at(1).get<std::uint64_t>();
            for (std::uint64_t k = 0; k < c; ++k) m.record(x, a, y);
        }
    }
    return m;
}

} // namespace ltlrl
