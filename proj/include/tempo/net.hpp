#pragma once

#include "tempo/linarith.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tempo {

// Ground marking / arc-weight bag: place name -> multiplicity.
// Only strictly positive entries are stored; an absent place has multiplicity 0.
struct Bag {
    std::map<std::string, long long> entries;

    long long at(const std::string& place) const {
        auto it = entries.find(place);
        return it == entries.end() ? 0 : it->second;
    }
    void set(const std::string& place, long long n);
    bool empty() const { return entries.empty(); }
    bool operator==(const Bag&) const = default;
};

// Marking with linear-expression multiplicities (parametric initial markings,
// symbolic successors). Absent place = the zero expression.
struct SymBag {
    std::map<std::string, LinExpr> entries;

    LinExpr at(const std::string& place) const {
        auto it = entries.find(place);
        return it == entries.end() ? LinExpr{} : it->second;
    }
    void set(const std::string& place, LinExpr e);
    bool is_ground() const;
    Bag as_ground() const;  // throws EvalError if any entry is non-constant
    static SymBag of(const Bag& b);
    bool operator==(const SymBag&) const = default;
};

struct ParamInterval {
    LinExpr lower;
    std::optional<LinExpr> upper;  // nullopt = unbounded (inf)
    bool operator==(const ParamInterval&) const = default;
};

struct Transition {
    std::string label;
    Bag pre;
    Bag post;
    Bag inhibit;
    ParamInterval interval;
    bool operator==(const Transition&) const = default;
};

struct NetSpec {
    std::string name;
    std::vector<std::string> places;     // declaration order
    std::vector<VarId> time_params;      // VarKind::TimeParam
    std::vector<VarId> mark_params;      // VarKind::MarkParam
    std::vector<Transition> transitions;
    SymBag initial_marking;
    Constraint k0;                       // user atoms + implied (params >= 0, intervals non-empty)
    std::vector<Atom> user_atoms;        // constraint lines as written (canonical print emits these)
    std::vector<std::string> warnings;   // loader notes (e.g. interval atoms conjoined into K0)

    const Transition* find(const std::string& label) const;
    int index_of(const std::string& label) const;  // -1 if absent
    bool has_place(const std::string& place) const;
    SymbolTable symbols() const;  // all declared parameters, for parsing related text
    bool operator==(const NetSpec& o) const;
};

// ---- marking algebra ----------------------------------------------------

bool bag_leq(const Bag& a, const Bag& b);              // pointwise <=
Constraint sym_bag_leq(const Bag& a, const SymBag& b); // conjunction of pointwise atoms
Bag bag_add(const Bag& a, const Bag& b);
Bag bag_sub(const Bag& a, const Bag& b);               // throws NetError on underflow
SymBag sym_bag_add(const SymBag& a, const Bag& b);
SymBag sym_bag_sub(const SymBag& a, const Bag& b);     // entries become LinExpr differences

// ---- structural predicates ----------------------------------------------

bool enabled(const Bag& m, const Transition& t);
bool inhibited(const Bag& m, const Transition& t);
bool active(const Bag& m, const Transition& t);
// (pre(t) <= m - pre(fired) + post(fired)) and (t = fired or not (pre(t) <= m - pre(fired)))
bool newly_enabled(const Transition& t, const Bag& m, const Transition& fired);

Constraint sym_enabled(const SymBag& m, const Transition& t);
Constraint sym_not_inhibited(const SymBag& m, const Transition& t);
Constraint sym_active(const SymBag& m, const Transition& t);

// ---- i/o ------------------------------------------------------------------

struct NetError : ParseError {
    using ParseError::ParseError;
};

NetSpec parse_net(const std::string& text);
NetSpec load_net(const std::string& path);  // reads the file, parse errors mention the path
std::string show(const NetSpec& net);       // canonical text; parse(show(net)) == net

std::string net_to_json(const NetSpec& net);
NetSpec net_from_json(const std::string& json_text);

// Substitute parameter values (must satisfy K0) producing a ground net.
// All time parameters need a value in pi_time, all marking parameters in pi_mark.
NetSpec ground_instance(const NetSpec& net, const std::map<std::string, Rat>& pi_time,
                        const std::map<std::string, long long>& pi_mark = {});

}  // namespace tempo
