#include "ltlrl/guard.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ltlrl {

namespace {

// Sorts and deduplicates a cube; returns false if it is contradictory.
bool normalize_cube(Cube& c) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    for (std::size_t i = 1; i < c.size(); ++i) {
        if (c[i].prop == c[i - 1].prop) return false;
    }
    return true;
}

// a subsumes b if every literal of a appears in b.
bool subsumes(const Cube& a, const Cube& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

std::string to_string(const Symbol& s) {
    std::string out = "{";
    for (std::size_t i = 0; i < s.props().size(); ++i) {
        if (i) out += ",";
        out += "p" + std::to_string(s.props()[i]);
    }
    return out + "}";
}

Guard::Guard(std::vector<Cube> cubes) {
    for (auto& c : cubes) {
        if (normalize_cube(c)) cubes_.push_back(std::move(c));
    }
    std::sort(cubes_.begin(), cubes_.end(),
              [](const Cube& a, const Cube& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });
    cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
    // Drop cubes implied by a shorter one.
    std::vector<Cube> kept;
    for (auto& c : cubes_) {
        bool redundant = std::any_of(kept.begin(), kept.end(), [&](const Cube& k) { return subsumes(k, c); });
        if (!redundant) kept.push_back(std::move(c));
    }
    cubes_ = std::move(kept);
}

bool Guard::eval(const Symbol& sigma) const {
    for (const auto& cube : cubes_) {
        bool ok = true;
        for (const auto& lit : cube) {
            if (sigma.contains(lit.prop) != lit.positive) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

bool Guard::feasibly_satisfiable() const {
    // A cube is satisfied by some |σ| <= 1 symbol iff it has at most one
    // distinct positive literal (cubes are already contradiction-free).
    return std::any_of(cubes_.begin(), cubes_.end(), [](const Cube& c) {
        return std::count_if(c.begin(), c.end(), [](const Literal& l) { return l.positive; }) <= 1;
    });
}

bool Guard::is_true() const {
    return std::any_of(cubes_.begin(), cubes_.end(), [](const Cube& c) { return c.empty(); });
}

std::vector<PropId> Guard::props() const {
    std::vector<PropId> out;
    for (const auto& c : cubes_)
        for (const auto& l : c) out.push_back(l.prop);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Guard operator||(const Guard& a, const Guard& b) {
    std::vector<Cube> cubes = a.cubes_;
    cubes.insert(cubes.end(), b.cubes_.begin(), b.cubes_.end());
    return Guard{std::move(cubes)};
}

Guard operator&&(const Guard& a, const Guard& b) {
    std::vector<Cube> cubes;
    for (const auto& x : a.cubes_) {
        for (const auto& y : b.cubes_) {
            Cube c = x;
            c.insert(c.end(), y.begin(), y.end());
            cubes.push_back(std::move(c));
        }
    }
    return Guard{std::move(cubes)};
}

Guard operator!(const Guard& g) {
    // De Morgan: the negation of a disjunction of cubes is the conjunction
    // of the negated cubes, each of which is a disjunction of literals.
    Guard result = Guard::always();
    for (const auto& cube : g.cubes_) {
        std::vector<Cube> negated;
        for (const auto& lit : cube) negated.push_back(Cube{Literal{lit.prop, !lit.positive}});
        result = result && Guard{std::move(negated)};
    }
    return result;
}

std::string to_hoa_label(const Guard& g, const std::vector<PropId>& aps) {
    if (g.is_false()) return "f";
    if (g.is_true()) return "t";
    auto index_of = [&](PropId p) {
        auto it = std::find(aps.begin(), aps.end(), p);
        if (it == aps.end()) throw std::invalid_argument("proposition p" + std::to_string(p) + " not in AP list");
        return static_cast<std::size_t>(it - aps.begin());
    };
    std::ostringstream os;
    const auto& cubes = g.cubes();
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (i) os << " | ";
        const bool paren = cubes.size() > 1 && cubes[i].size() > 1;
        if (paren) os << "(";
        for (std::size_t j = 0; j < cubes[i].size(); ++j) {
            if (j) os << " & ";
            if (!cubes[i][j].positive) os << "!";
            os << index_of(cubes[i][j].prop);
        }
        if (paren) os << ")";
    }
    return os.str();
}

std::string to_string(const Guard& g) {
    if (g.is_false()) return "false";
    if (g.is_true()) return "true";
    std::ostringstream os;
    const auto& cubes = g.cubes();
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        if (i) os << " | ";
        for (std::size_t j = 0; j < cubes[i].size(); ++j) {
            if (j) os << " & ";
            if (!cubes[i][j].positive) os << "!";
            os << "p" << cubes[i][j].prop;
        }
    }
    return os.str();
}

} // namespace ltlrl
