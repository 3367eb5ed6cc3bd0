#pragma once

#include "ltlrl/automaton.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace ltlrl {

/// Malformed HOA document (lexical or syntactic problem).
class HoaParseError : public std::runtime_error {
public:
    HoaParseError(int line, const std::string& what)
        : std::runtime_error("HOA line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] int line() const { return line_; }

private:
    int line_;
};

/// Well-formed document that does not describe a supported automaton
/// (nondeterministic Rabin transitions, acceptance mismatch, unknown
/// proposition, transition-based acceptance, ...).
class HoaSemanticError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using TaskAutomaton = std::variant<RabinAutomaton, LimitDetBuchi>;

/// Maps an AP name to a proposition id. Accepts `N`, `pN`, `piN`, `pi_N`,
/// `pi^N` and `xN`; returns nullopt for anything else.
std::optional<PropId> proposition_from_name(std::string_view name);

/// Parses a HOA v1 document with state-based acceptance.
///
/// Rabin acceptance is a disjunction of `Fin(i) & Inf(j)` clauses (`Inf(j)`
/// alone gives an empty B set). A conjunction of `Inf` sets is read as a
/// generalized Büchi condition and yields a limit-deterministic automaton
/// whose partition is inferred. A single `Inf` set is read as Rabin unless the
/// document is nondeterministic or declares epsilon edges. Epsilon edges use
/// the optional header `epsilon: <src> <dst>`, one per edge.
///
/// `names` overrides the AP-name resolution of proposition_from_name.
TaskAutomaton parse_hoa(std::string_view text, const std::map<std::string, PropId>& names = {});

/// As parse_hoa, but requires a Rabin automaton.
RabinAutomaton parse_hoa_rabin(std::string_view text, const std::map<std::string, PropId>& names = {});

/// Serializes with AP names `p<id>` and state-based acceptance. Rabin pair i is
/// written as `Fin(2i) & Inf(2i+1)`.
std::string to_hoa(const RabinAutomaton& automaton);
std::string to_hoa(const LimitDetBuchi& automaton);

} // namespace ltlrl
