#pragma once

#include "ltlrl/types.hpp"

#include <string>
#include <vector>

namespace ltlrl {

struct Literal {
    PropId prop = 0;
    bool positive = true;

    friend bool operator==(const Literal&, const Literal&) = default;
    friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// Conjunction of literals. The empty conjunction is `true`.
using Cube = std::vector<Literal>;

/// Boolean predicate over 2^AP kept in disjunctive normal form. The empty
/// disjunction is `false`. Cubes are sorted, duplicate-free and never
/// contain a literal together with its negation.
class Guard {
public:
    Guard() = default;
    explicit Guard(std::vector<Cube> cubes);

    static Guard always() { return Guard{std::vector<Cube>{Cube{}}}; }
    static Guard never() { return Guard{}; }
    static Guard prop(PropId p) { return Guard{{Cube{Literal{p, true}}}}; }
    static Guard not_prop(PropId p) { return Guard{{Cube{Literal{p, false}}}}; }

    [[nodiscard]] bool eval(const Symbol& sigma) const;

    /// True iff some symbol with at most one proposition satisfies the guard.
    [[nodiscard]] bool feasibly_satisfiable() const;

    [[nodiscard]] bool is_true() const;
    [[nodiscard]] bool is_false() const { return cubes_.empty(); }
    [[nodiscard]] const std::vector<Cube>& cubes() const { return cubes_; }

    /// Propositions mentioned by any literal, sorted.
    [[nodiscard]] std::vector<PropId> props() const;

    friend Guard operator||(const Guard& a, const Guard& b);
    friend Guard operator&&(const Guard& a, const Guard& b);
    friend Guard operator!(const Guard& g);

    friend bool operator==(const Guard&, const Guard&) = default;

private:
    std::vector<Cube> cubes_;
};

/// Renders a guard in HOA label syntax. Propositions are written as their
/// position in `aps`, which must contain every proposition of the guard.
std::string to_hoa_label(const Guard& g, const std::vector<PropId>& aps);

/// Human-readable form using proposition names `p<id>`.
std::string to_string(const Guard& g);

} // namespace ltlrl
