#pragma once

#include "tempo/symbolic.hpp"

#include <cstddef>
#include <limits>

namespace tempo {

// ---------------------------------------------------------------------------
// Now-projection. A symbolic state carries its whole history: clocks and
// marking entries are expressions over the delay variables of the path that
// produced it, so two states reached along different paths are not directly
// comparable. Projection renames what is observable *now* onto one canonical
// variable per place (now(p)), per transition (clock(t)), and for tracked
// global time (time), then existentially eliminates the history. Two states
// of the same net then live over a shared vocabulary and contain each other
// exactly when their projected constraints imply one another.

// Optional extension observable carried alongside the built-in ones: a
// discrete tag that becomes part of the canonical key, plus (optionally) one
// more clock-like expression to project. The response-latency analysis uses
// this for its requirement clock.
struct Observation {
    int tag = 0;
    std::optional<LinExpr> expr;
};

struct ProjectedState {
    TickFlag tick_flag = TickFlag::TickOk;
    std::vector<std::pair<std::string, VarId>> marking_shape;  // net place order
    std::vector<std::pair<std::string, VarId>> clock_shape;    // transition order
    std::optional<VarId> global_time_var;
    std::optional<VarId> extra_var;  // the Observation expression's variable
    Constraint constraint;           // over parameters + the variables above
};

ProjectedState project_now(const NetSpec& net, const SymState& s,
                           const Observation& obs = {});

// u ⪯ v: every concrete instance of u is an instance of v. Decided by
// matching tick flags and canonical keys, then implication of the projected
// constraints (the canonical renaming plays the matching substitution, so no
// unification is ever needed).
bool subsumes(const NetSpec& net, const SymState& u, const SymState& v);

// What a visited-map entry is keyed by: the tick flag, the extension tag, and
// the marking's identity — its exact token counts when ground (the common
// case), or the set of structurally marked places when entries are
// parametric.
struct CanonicalKey {
    TickFlag tick_flag = TickFlag::TickOk;
    int tag = 0;
    std::string fingerprint;

    auto operator<=>(const CanonicalKey&) const = default;
};

CanonicalKey canonical_key(const NetSpec& net, const SymState& s, int tag = 0);

// Monotone accumulator of visited projections: each key maps to the
// disjunction of every projected constraint kept under it. Disjuncts are
// stored unmerged — no widening — so coverage is exact and a state once
// covered stays covered as the map grows.
struct VisitedMap {
    std::map<CanonicalKey, Formula> entries;

    bool covers(const CanonicalKey& k, const ProjectedState& p) const;
    void add(const CanonicalKey& k, const ProjectedState& p);
    std::size_t states() const;  // total disjuncts held
};

// ---------------------------------------------------------------------------
// Reachability engines. All four search the symbolic successor relation for
// states where the goal proposition holds (satisfiability semantics) and
// report them as witnesses; they differ in how (and whether) they fold.

struct Witness {
    SymBag marking;
    Constraint param_constraint;  // full_constraint projected onto parameters
    Constraint full_constraint;   // path constraint ∧ the matched goal case
    std::vector<std::string> path;  // edge labels from the initial state
};

enum class Engine : std::uint8_t {
    Sym,         // plain breadth-first search, tick alternation
    Sym2,        // plain breadth-first search, strict tick/fire alternation
    FoldBranch,  // depth-first, each branch folds against its own path map
    FoldGlobal,  // breadth-first with one global visited map
};

std::optional<Engine> parse_engine(std::string_view name);
std::string show(Engine e);

struct ReachOpts {
    TheoryVariant variant = TheoryVariant::r1s();
    std::size_t max_sols = 1;
    std::size_t max_depth = std::numeric_limits<std::size_t>::max();
    std::size_t max_states = 10000;
    int workers = 1;  // > 1 parallelizes fold_reach_global frontier expansion
    // Fire-step priority filter: when any listed transition can fire, only the
    // first fireable one's successors are kept (time steps are unaffected).
    // Empty = no restriction.
    std::vector<std::string> priority;
};

struct ReachResult {
    std::vector<Witness> witnesses;
    // True when the search ran out of states to explore: every reachable
    // state was expanded or folded, so "no witnesses" means no solution.
    // False when a budget (max_states/max_depth) or the solution cap cut the
    // search short — an empty witness list then means "not found", not
    // "impossible".
    bool exhausted = false;
    std::size_t states = 0;  // states kept (expanded), including the initial
    VisitedMap visited;      // fold_reach_global only: the final folded map
};

// Depth-first exploration where each branch carries its own visited map: a
// successor is discarded only when an entry accumulated along its own path
// already covers it.
ReachResult fold_reach_branch(const NetSpec& net, const SymState& init,
                              const Prop& goal, const ReachOpts& opts);

// Breadth-first frontier expansion against a single global visited map.
// With opts.workers > 1 the frontier is expanded by an OpenMP team; the
// serial reference path (workers == 1) produces identical results and is the
// one the benchmark harness compares against.
ReachResult fold_reach_global(const NetSpec& net, const SymState& init,
                              const Prop& goal, const ReachOpts& opts);

// Plain breadth-first search over the raw symbolic tree, no folding. Complete
// up to its budgets; diverges on any net with unbounded symbolic behavior.
ReachResult plain_reach(const NetSpec& net, const SymState& init,
                        const Prop& goal, const ReachOpts& opts);

// Engine dispatch. Engine::Sym2 forces the strict-alternation variant and
// refuses a time-tracking initial state.
ReachResult reach(const NetSpec& net, const SymState& init, const Prop& goal,
                  Engine engine, const ReachOpts& opts);

}  // namespace tempo
