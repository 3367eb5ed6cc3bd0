#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace ltlrl {

/// Index of an MDP state (0-based).
using MdpState = std::int32_t;
/// Index of an automaton state (0-based).
using AutState = std::int32_t;
/// Index of an MDP action.
using ActionId = std::int32_t;
/// Atomic proposition identifier. Propositions name MDP locations; on grid
/// worlds the identifier is the 1-based row-major cell number.
using PropId = std::int32_t;

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// A letter of the alphabet 2^AP: the set of propositions that hold.
class Symbol {
public:
    Symbol() = default;
    Symbol(std::initializer_list<PropId> props) : props_(props) { normalize(); }
    explicit Symbol(std::vector<PropId> props) : props_(std::move(props)) { normalize(); }

    static Symbol single(PropId p) { return Symbol{p}; }

    [[nodiscard]] bool contains(PropId p) const {
        return std::binary_search(props_.begin(), props_.end(), p);
    }
    [[nodiscard]] bool empty() const { return props_.empty(); }
    [[nodiscard]] std::size_t size() const { return props_.size(); }
    [[nodiscard]] const std::vector<PropId>& props() const { return props_; }

    friend bool operator==(const Symbol&, const Symbol&) = default;
    friend auto operator<=>(const Symbol&, const Symbol&) = default;

private:
    void normalize() {
        std::sort(props_.begin(), props_.end());
        props_.erase(std::unique(props_.begin(), props_.end()), props_.end());
    }

    std::vector<PropId> props_;
};

std::string to_string(const Symbol& s);

/// Seeded random stream. Draws are platform-independent: only the raw
/// mt19937_64 output is consumed, never the implementation-defined std
/// distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace ltlrl
