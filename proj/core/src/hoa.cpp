#include "ltlrl/hoa.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace ltlrl {

namespace {

enum class Tok { header, ident, integer, string, alias, punct, body, end, eof };

struct Token {
    Tok kind;
    std::string text;
    int line;
};

std::vector<Token> tokenize(std::string_view in) {
    std::vector<Token> out;
    int line = 1;
    std::size_t i = 0;
    auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; };
    while (i < in.size()) {
        char c = in[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '/' && i + 1 < in.size() && in[i + 1] == '*') {
            const int start = line;
            i += 2;
            while (i + 1 < in.size() && !(in[i] == '*' && in[i + 1] == '/')) {
                if (in[i] == '\n') ++line;
                ++i;
            }
            if (i + 1 >= in.size()) throw HoaParseError(start, "unterminated comment");
            i += 2;
        } else if (in.substr(i, 8) == "--BODY--") {
            out.push_back({Tok::body, "--BODY--", line});
            i += 8;
        } else if (in.substr(i, 7) == "--END--") {
            out.push_back({Tok::end, "--END--", line});
            i += 7;
        } else if (in.substr(i, 9) == "--ABORT--") {
            throw HoaParseError(line, "document aborted");
        } else if (c == '"') {
            std::string s;
            ++i;
            while (i < in.size() && in[i] != '"') {
                if (in[i] == '\\' && i + 1 < in.size()) ++i;
                if (in[i] == '\n') ++line;
                s += in[i++];
            }
            if (i >= in.size()) throw HoaParseError(line, "unterminated string");
            ++i;
            out.push_back({Tok::string, s, line});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < in.size() && std::isdigit(static_cast<unsigned char>(in[j]))) ++j;
            out.push_back({Tok::integer, std::string(in.substr(i, j - i)), line});
            i = j;
        } else if (c == '@') {
            std::size_t j = i + 1;
            while (j < in.size() && ident_char(in[j])) ++j;
            if (j == i + 1) throw HoaParseError(line, "empty alias name");
            out.push_back({Tok::alias, std::string(in.substr(i + 1, j - i - 1)), line});
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < in.size() && ident_char(in[j])) ++j;
            std::string word(in.substr(i, j - i));
            if (j < in.size() && in[j] == ':') {
                out.push_back({Tok::header, word, line});
                i = j + 1;
            } else {
                out.push_back({Tok::ident, word, line});
                i = j;
            }
        } else if (std::string_view("[](){}!&|").find(c) != std::string_view::npos) {
            out.push_back({Tok::punct, std::string(1, c), line});
            ++i;
        } else {
            throw HoaParseError(line, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Tok::eof, "", line});
    return out;
}

// Acceptance condition in disjunctive normal form.
struct AccClause {
    std::set<int> fin;
    std::set<int> inf;
    bool operator<(const AccClause& o) const { return std::tie(fin, inf) < std::tie(o.fin, o.inf); }
};
using AccDnf = std::vector<AccClause>;

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_punct(char c) const { return peek().kind == Tok::punct && peek().text[0] == c; }
    void expect_punct(char c) {
        if (!at_punct(c)) fail(std::string("expected '") + c + "'");
        take();
    }
    int take_int() {
        if (peek().kind != Tok::integer) fail("expected integer");
        return std::stoi(take().text);
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw HoaParseError(peek().line, what + (peek().text.empty() ? "" : " near '" + peek().text + "'"));
    }
    // True at a token that starts a new header/state item.
    bool at_item_boundary() const {
        auto k = peek().kind;
        return k == Tok::header || k == Tok::body || k == Tok::end || k == Tok::eof;
    }

    // label expression -> Guard over AP indices
    Guard label_or(const std::vector<PropId>& props, const std::map<std::string, Guard>& aliases) {
        Guard g = label_and(props, aliases);
        while (at_punct('|')) {
            take();
            g = g || label_and(props, aliases);
        }
        return g;
    }
    Guard label_and(const std::vector<PropId>& props, const std::map<std::string, Guard>& aliases) {
        Guard g = label_not(props, aliases);
        while (at_punct('&')) {
            take();
            g = g && label_not(props, aliases);
        }
        return g;
    }
    Guard label_not(const std::vector<PropId>& props, const std::map<std::string, Guard>& aliases) {
        if (at_punct('!')) {
            take();
            return !label_not(props, aliases);
        }
        if (at_punct('(')) {
            take();
            Guard g = label_or(props, aliases);
            expect_punct(')');
            return g;
        }
        const Token& t = peek();
        if (t.kind == Tok::ident && t.text == "t") {
            take();
            return Guard::always();
        }
        if (t.kind == Tok::ident && t.text == "f") {
            take();
            return Guard::never();
        }
        if (t.kind == Tok::integer) {
            int idx = take_int();
            if (idx < 0 || static_cast<std::size_t>(idx) >= props.size())
                throw HoaParseError(t.line, "AP index " + std::to_string(idx) + " out of range");
            return Guard::prop(props[idx]);
        }
        if (t.kind == Tok::alias) {
            auto it = aliases.find(t.text);
            if (it == aliases.end()) fail("undefined alias @" + t.text);
            take();
            return it->second;
        }
        fail("malformed label expression");
    }

    AccDnf acc_or() {
        AccDnf d = acc_and();
        while (at_punct('|')) {
            take();
            auto rhs = acc_and();
            d.insert(d.end(), rhs.begin(), rhs.end());
        }
        return d;
    }
    AccDnf acc_and() {
        AccDnf d = acc_atom();
        while (at_punct('&')) {
            take();
            auto rhs = acc_atom();
            AccDnf prod;
            for (const auto& a : d)
                for (const auto& b : rhs) {
                    AccClause c = a;
                    c.fin.insert(b.fin.begin(), b.fin.end());
                    c.inf.insert(b.inf.begin(), b.inf.end());
                    prod.push_back(std::move(c));
                }
            d = std::move(prod);
        }
        return d;
    }
    AccDnf acc_atom() {
        if (at_punct('(')) {
            take();
            auto d = acc_or();
            expect_punct(')');
            return d;
        }
        const Token& t = peek();
        if (t.kind == Tok::ident && t.text == "t") {
            take();
            return {AccClause{}};
        }
        if (t.kind == Tok::ident && t.text == "f") {
            take();
            return {};
        }
        if (t.kind == Tok::ident && (t.text == "Fin" || t.text == "Inf")) {
            const bool fin = t.text == "Fin";
            take();
            expect_punct('(');
            if (at_punct('!')) throw HoaSemanticError("complemented acceptance sets are not supported");
            int set = take_int();
            expect_punct(')');
            AccClause c;
            (fin ? c.fin : c.inf).insert(set);
            return {c};
        }
        fail("malformed acceptance condition");
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

struct RawEdge {
    AutState from;
    Guard guard;
    AutState to;
};

PropId resolve_ap(const std::string& name, const std::map<std::string, PropId>& names) {
    if (auto it = names.find(name); it != names.end()) return it->second;
    if (auto p = proposition_from_name(name)) return *p;
    throw HoaSemanticError("unknown proposition \"" + name + "\"");
}

bool epsilon_free_deterministic(const TransitionStructure& s) {
    if (s.has_epsilon()) return false;
    for (const auto& sigma : feasible_symbols(s.aps()))
        for (std::size_t q = 0; q < s.size(); ++q)
            if (s.successors(static_cast<AutState>(q), sigma).size() != 1) return false;
    return true;
}

} // namespace

std::optional<PropId> proposition_from_name(std::string_view name) {
    for (std::string_view prefix : {"pi^", "pi_", "pi", "p", "x", ""}) {
        if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) continue;
        auto digits = name.substr(prefix.size());
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            continue;
        if (digits.size() > 9) return std::nullopt;
        return static_cast<PropId>(std::stol(std::string(digits)));
    }
    return std::nullopt;
}

TaskAutomaton parse_hoa(std::string_view text, const std::map<std::string, PropId>& names) {
    Parser p(tokenize(text));

    if (p.peek().kind != Tok::header || p.peek().text != "HOA") p.fail("document must start with 'HOA:'");
    p.take();
    if (p.peek().kind != Tok::ident || p.peek().text != "v1") p.fail("unsupported HOA version");
    p.take();

    std::optional<int> num_states;
    std::optional<int> start;
    std::vector<PropId> props;
    bool have_ap = false;
    std::map<std::string, Guard> aliases;
    std::optional<AccDnf> acceptance;
    int acc_sets = 0;
    std::vector<std::pair<int, int>> epsilon_edges;

    while (p.peek().kind == Tok::header) {
        const Token h = p.take();
        if (h.text == "States") {
            num_states = p.take_int();
        } else if (h.text == "Start") {
            if (start) throw HoaSemanticError("multiple initial states are not supported");
            start = p.take_int();
            if (p.at_punct('&')) throw HoaSemanticError("alternating initial states are not supported");
        } else if (h.text == "AP") {
            have_ap = true;
            int n = p.take_int();
            for (int k = 0; k < n; ++k) {
                if (p.peek().kind != Tok::string) p.fail("expected AP name");
                props.push_back(resolve_ap(p.take().text, names));
            }
            auto sorted = props;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw HoaSemanticError("two AP names map to the same proposition");
        } else if (h.text == "Alias") {
            if (p.peek().kind != Tok::alias) p.fail("expected @alias");
            std::string name = p.take().text;
            aliases[name] = p.label_or(props, aliases);
        } else if (h.text == "Acceptance") {
            acc_sets = p.take_int();
            acceptance = p.acc_or();
        } else if (h.text == "epsilon") {
            int a = p.take_int();
            int b = p.take_int();
            epsilon_edges.emplace_back(a, b);
        } else if (h.text == "State") {
            p.fail("'State:' before --BODY--");
        } else {
            // acc-name, name, tool, properties and unknown optional headers.
            if (std::isupper(static_cast<unsigned char>(h.text[0])) && h.text != "Properties" &&
                h.text != "Alias" && h.text != "Acceptance")
                throw HoaParseError(h.line, "unsupported header '" + h.text + ":'");
            while (!p.at_item_boundary()) p.take();
        }
    }
    if (p.peek().kind != Tok::body) p.fail("expected --BODY--");
    p.take();
    if (!have_ap) throw HoaSemanticError("missing AP header");
    if (!start) throw HoaSemanticError("missing Start header");
    if (!acceptance) throw HoaSemanticError("missing Acceptance header");

    std::vector<RawEdge> edges;
    std::map<int, std::set<int>> state_marks;
    std::map<int, std::string> state_names;
    int max_state = *start;
    for (auto [a, b] : epsilon_edges) max_state = std::max({max_state, a, b});

    while (p.peek().kind == Tok::header && p.peek().text == "State") {
        p.take();
        if (p.at_punct('[')) throw HoaSemanticError("state labels are not supported; label the edges");
        int q = p.take_int();
        max_state = std::max(max_state, q);
        if (p.peek().kind == Tok::string) state_names[q] = p.take().text;
        if (p.at_punct('{')) {
            p.take();
            while (!p.at_punct('}')) {
                int set = p.take_int();
                if (set < 0 || set >= acc_sets) throw HoaSemanticError("acceptance set index out of range");
                state_marks[q].insert(set);
            }
            p.take();
        }
        while (!p.at_item_boundary()) {
            if (!p.at_punct('[')) throw HoaSemanticError("implicit (unlabeled) edges are not supported");
            p.take();
            Guard g = p.label_or(props, aliases);
            p.expect_punct(']');
            int to = p.take_int();
            if (p.at_punct('&')) throw HoaSemanticError("universal branching is not supported");
            if (p.at_punct('{')) throw HoaSemanticError("transition-based acceptance is not supported");
            max_state = std::max(max_state, to);
            edges.push_back({q, std::move(g), to});
        }
    }
    if (p.peek().kind != Tok::end) p.fail("expected --END--");

    const int n = num_states.value_or(max_state + 1);
    if (max_state >= n) throw HoaSemanticError("state index exceeds declared state count");

    TransitionStructure structure(static_cast<std::size_t>(n), props);
    try {
        for (auto& e : edges) structure.add_edge(e.from, std::move(e.guard), e.to);
        for (auto [a, b] : epsilon_edges) structure.add_epsilon(a, b);
    } catch (const AutomatonError& e) {
        throw HoaSemanticError(e.what());
    }

    std::vector<std::string> names_out;
    if (!state_names.empty()) {
        for (int q = 0; q < n; ++q) {
            auto it = state_names.find(q);
            names_out.push_back(it != state_names.end() ? it->second : "q" + std::to_string(q));
        }
    }
    auto states_in = [&](int set) {
        std::vector<AutState> out;
        for (const auto& [q, marks] : state_marks)
            if (marks.count(set)) out.push_back(q);
        return out;
    };

    AccDnf dnf = *acceptance;
    std::sort(dnf.begin(), dnf.end());
    dnf.erase(std::unique(dnf.begin(), dnf.end(), [](const AccClause& a, const AccClause& b) {
                  return a.fin == b.fin && a.inf == b.inf;
              }), dnf.end());
    const bool rabin_shape = !dnf.empty() && std::all_of(dnf.begin(), dnf.end(), [](const AccClause& c) {
        return c.inf.size() == 1 && c.fin.size() <= 1;
    });
    const bool gen_buchi_shape = dnf.size() == 1 && dnf[0].fin.empty() && !dnf[0].inf.empty();
    const bool single_inf = gen_buchi_shape && dnf[0].inf.size() == 1;

    bool as_rabin = rabin_shape && !(single_inf && !epsilon_free_deterministic(structure));
    try {
        if (as_rabin) {
            std::vector<RabinPair> pairs;
            for (const auto& c : dnf) {
                RabinPair pair;
                pair.good = states_in(*c.inf.begin());
                if (!c.fin.empty()) pair.bad = states_in(*c.fin.begin());
                pairs.push_back(std::move(pair));
            }
            try {
                return RabinAutomaton(std::move(structure), *start, std::move(pairs), std::move(names_out));
            } catch (const AutomatonError& e) {
                throw HoaSemanticError(e.what());
            }
        }
        if (gen_buchi_shape) {
            std::vector<std::vector<AutState>> sets;
            for (int s : dnf[0].inf) sets.push_back(states_in(s));
            return LimitDetBuchi::with_inferred_partition(std::move(structure), *start, std::move(sets),
                                                          std::move(names_out));
        }
    } catch (const AutomatonError& e) {
        throw HoaSemanticError(e.what());
    }
    throw HoaSemanticError("acceptance condition is neither Rabin nor generalized Büchi");
}

RabinAutomaton parse_hoa_rabin(std::string_view text, const std::map<std::string, PropId>& names) {
    auto parsed = parse_hoa(text, names);
    if (auto* r = std::get_if<RabinAutomaton>(&parsed)) return std::move(*r);
    throw HoaSemanticError("expected a Rabin automaton");
}

namespace {

void write_common(std::ostringstream& os, const TransitionStructure& s, AutState initial,
                  const std::vector<std::string>& names) {
    os << "HOA: v1\n";
    os << "States: " << s.size() << "\n";
    os << "Start: " << initial << "\n";
    os << "AP: " << s.aps().size();
    for (PropId p : s.aps()) os << " \"p" << p << "\"";
    os << "\n";
    (void)names;
}

void write_state_edges(std::ostringstream& os, const TransitionStructure& s, AutState q) {
    for (const auto& e : s.edges(q)) os << "[" << to_hoa_label(e.guard, s.aps()) << "] " << e.target << "\n";
}

void write_state_header(std::ostringstream& os, AutState q, const std::vector<std::string>& names,
                        const std::vector<int>& marks) {
    os << "State: " << q;
    if (!names.empty()) os << " \"" << names.at(q) << "\"";
    if (!marks.empty()) {
        os << " {";
        for (std::size_t i = 0; i < marks.size(); ++i) os << (i ? " " : "") << marks[i];
        os << "}";
    }
    os << "\n";
}

} // namespace

std::string to_hoa(const RabinAutomaton& a) {
    std::ostringstream os;
    write_common(os, a.structure(), a.initial(), a.state_names());
    const std::size_t k = a.pairs().size();
    os << "acc-name: Rabin " << k << "\n";
    os << "Acceptance: " << 2 * k << " ";
    if (k == 0) os << "f";
    for (std::size_t i = 0; i < k; ++i) {
        if (i) os << " | ";
        os << "(Fin(" << 2 * i << ") & Inf(" << 2 * i + 1 << "))";
    }
    os << "\nproperties: deterministic state-acc\n--BODY--\n";
    for (std::size_t q = 0; q < a.size(); ++q) {
        const auto qs = static_cast<AutState>(q);
        std::vector<int> marks;
        for (std::size_t i = 0; i < k; ++i) {
            if (a.in_bad(i, qs)) marks.push_back(static_cast<int>(2 * i));
            if (a.in_good(i, qs)) marks.push_back(static_cast<int>(2 * i + 1));
        }
        write_state_header(os, qs, a.state_names(), marks);
        write_state_edges(os, a.structure(), qs);
    }
    os << "--END--\n";
    return os.str();
}

std::string to_hoa(const LimitDetBuchi& a) {
    std::ostringstream os;
    write_common(os, a.structure(), a.initial(), a.state_names());
    const std::size_t k = a.num_sets();
    os << "acc-name: generalized-Buchi " << k << "\n";
    os << "Acceptance: " << k << " ";
    for (std::size_t j = 0; j < k; ++j) os << (j ? " & " : "") << "Inf(" << j << ")";
    os << "\n";
    for (std::size_t q = 0; q < a.size(); ++q)
        for (AutState t : a.structure().epsilon(static_cast<AutState>(q))) os << "epsilon: " << q << " " << t << "\n";
    os << "properties: state-acc\n--BODY--\n";
    for (std::size_t q = 0; q < a.size(); ++q) {
        const auto qs = static_cast<AutState>(q);
        std::vector<int> marks;
        for (std::size_t j : a.sets_containing(qs)) marks.push_back(static_cast<int>(j));
        write_state_header(os, qs, a.state_names(), marks);
        write_state_edges(os, a.structure(), qs);
    }
    os << "--END--\n";
    return os.str();
}

} // namespace ltlrl
