#pragma once

#include "tempo/net.hpp"

namespace tempo {

// ---------------------------------------------------------------------------
// State propositions: comparisons over place counts, transition clocks and
// elapsed time, marking coverage, and uniform boundedness, closed under
// and/or/not. Atom right-hand sides are linear expressions over the net's
// declared parameters.

enum class CmpRel : std::uint8_t { LT, LE, EQ, GE, GT };

bool cmp_holds(const Rat& lhs, CmpRel rel, const Rat& rhs);
std::string show(CmpRel rel);

struct Prop {
    enum class Kind : std::uint8_t {
        True,
        False,
        PlaceCmp,  // a REL expr           (a = place)
        ClockCmp,  // clock(a) REL expr    (a = transition)
        Reach,     // marking covers `marking`
        KBounded,  // every place count <= expr
        DiffGt,    // |clock(a) - clock(b)| > expr
        InTime,    // global time within `window`
        And,
        Or,
        Not,
    };

    Kind kind = Kind::True;
    std::string a, b;       // place/transition names for the comparison atoms
    CmpRel rel = CmpRel::LE;
    LinExpr expr;           // comparison rhs / k-bound / clock-difference bound
    Bag marking;            // Reach target
    ParamInterval window;   // InTime window
    std::vector<Prop> kids; // And/Or children, Not's single child

    bool operator==(const Prop&) const = default;

    static Prop truth() { return {}; }
    static Prop falsity();
    static Prop place_cmp(std::string place, CmpRel rel, LinExpr e);
    static Prop clock_cmp(std::string trans, CmpRel rel, LinExpr e);
    static Prop reach(Bag m);
    static Prop k_bounded(LinExpr e);
    static Prop diff_gt(std::string t1, std::string t2, LinExpr e);
    static Prop in_time(ParamInterval w);
    static Prop conj(std::vector<Prop> kids);
    static Prop disj(std::vector<Prop> kids);
    static Prop negate(Prop p);
};

// Pushes negations down to the atoms (comparison atoms absorb them by flipping
// the relation; other atoms keep a single Not wrapper).
Prop nnf(const Prop& p);

// Does any InTime atom occur (decides whether evaluation needs a time-carrying
// state)?
bool mentions_time(const Prop& p);

struct PropError : ParseError {
    using ParseError::ParseError;
};

// Parses against the net's declared places, transitions and parameters.
Prop parse_prop(const std::string& text, const NetSpec& net);
std::string show(const Prop& p);

// ---------------------------------------------------------------------------
// The temporal surface: the non-nested A/E fragment for the symbolic checker
// and a full LTL syntax tree for the concrete sampled-graph checker.

struct TemporalFormula {
    enum class Kind : std::uint8_t {
        Eventually,      // <> p
        Always,          // [] p
        Until,           // p U q
        TimedEventually, // <[l,u]> p
        TimedAlways,     // [[l,u]] p
        TimedUntil,      // p U [l,u] q
    };

    Kind kind = Kind::Eventually;
    Prop p, q;  // q only used by the Until forms
    std::optional<ParamInterval> window;

    bool operator==(const TemporalFormula&) const = default;
};

TemporalFormula parse_temporal(const std::string& text, const NetSpec& net);
std::string show(const TemporalFormula& f);

enum class PathQuant : std::uint8_t { ForAll, Exists };

// A model-checking query: `A` or `E`, a temporal formula, and an optional
// trailing `in-time r` bounding the total elapsed time of the analysis.
struct MCQuery {
    PathQuant quant = PathQuant::ForAll;
    TemporalFormula formula;
    std::optional<Rat> in_time;

    bool operator==(const MCQuery&) const = default;
};

MCQuery parse_mc_query(const std::string& text, const NetSpec& net);
std::string show(const MCQuery& q);

// ---------------------------------------------------------------------------
// Full LTL over Prop atoms (concrete checker only).

struct Ltl {
    enum class Kind : std::uint8_t {
        Atom,
        Not,
        And,
        Or,
        Imp,
        Next,
        Eventually,
        Always,
        Until,
        Release,
    };

    Kind kind = Kind::Atom;
    Prop atom;              // Kind::Atom payload
    std::vector<Ltl> kids;  // operands

    bool operator==(const Ltl&) const = default;

    static Ltl of(Prop p);
    static Ltl un(Kind k, Ltl a);
    static Ltl bin(Kind k, Ltl a, Ltl b);
};

Ltl parse_ltl(const std::string& text, const NetSpec& net);
std::string show(const Ltl& f);

}  // namespace tempo
