#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempo/concrete.hpp"

namespace tempo {

// Which symbolic theory drives exploration:
//   R1S  tick alternation only (no two consecutive ticks); fires at any time
//   R2S  R1S plus a global-time expression, optionally capped by a bound
//   R3S  additionally no two consecutive fires (strict tick/fire alternation)
struct TheoryVariant {
    enum class Kind : std::uint8_t { R1S, R2S, R3S };
    Kind kind = Kind::R1S;
    std::optional<Rat> time_bound;  // honoured under R2S only

    static TheoryVariant r1s() { return {}; }
    static TheoryVariant r2s(std::optional<Rat> bound = std::nullopt) {
        return {Kind::R2S, std::move(bound)};
    }
    static TheoryVariant r3s() { return {Kind::R3S, std::nullopt}; }
    bool operator==(const TheoryVariant&) const = default;
};

// A constrained symbolic state. Clock and marking entries are linear
// expressions over parameters and the delay variables allocated so far; any
// rational model of `constraint` instantiates the whole path to a concrete
// run. States are only ever constructed satisfiable.
struct SymState {
    Constraint constraint;
    TickFlag tick_flag = TickFlag::TickOk;
    SymBag marking;
    std::map<std::string, LinExpr> clocks;  // every transition has an entry
    std::optional<LinExpr> global_time;     // tracked under R2S
    int fresh_counter = 0;                  // next delay-variable instance

    bool operator==(const SymState&) const = default;
};

std::string show(const SymState& s);

// Initial symbolic state: the net's parameter constraints, all clocks zero.
// Throws SemanticsError if the parameter constraints are unsatisfiable.
SymState sym_initial(const NetSpec& net, const TheoryVariant& variant);

// One symbolic tick with a fresh delay variable; requires tick_flag == TickOk
// (throws otherwise, mirroring the concrete alternation error). A ground
// marking yields exactly one successor; with symbolic marking entries each
// undecidable activity guard case-splits the result. Never empty.
std::vector<SymState> sym_tick(const NetSpec& net, const SymState& s,
                               const TheoryVariant& variant);

// Fire `label`. An empty result means the step is infeasible here (pre
// unsatisfied, inhibited, the clock cannot sit in the firing interval, or the
// variant's alternation discipline forbids firing). Symbolic markings may
// case-split on enabledness in the intermediate marking.
std::vector<SymState> sym_fire(const NetSpec& net, const SymState& s,
                               const std::string& label, const TheoryVariant& variant);

struct SymEdge {
    std::string label;  // "tick(<delay var>)" or the fired transition
    SymState to;
};

// All one-step successors the variant permits from s.
std::vector<SymEdge> sym_successors(const NetSpec& net, const SymState& s,
                                    const TheoryVariant& variant);

// The proposition as a formula over the state's marking/clock/time
// expressions: p holds on some concrete instance of s exactly when
// s.constraint ∧ encode(p, s, net) is satisfiable. In-time atoms need a
// time-tracking state (SemanticsError otherwise); unknown place or transition
// names are errors.
Formula encode(const Prop& p, const SymState& s, const NetSpec& net);

// Existential (satisfiability-based) evaluation — the convention every
// symbolic analysis in this tool uses. On states with a ground marking and
// ground clocks it coincides with exact evaluation; in general
// holds_sym(p) and holds_sym(not p) may both be true on one symbolic state.
bool holds_sym(const Prop& p, const SymState& s, const NetSpec& net);

}  // namespace tempo
