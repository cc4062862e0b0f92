#pragma once

#include "tempo/prop.hpp"

#include <cstdint>
#include <optional>

namespace tempo {

// ---------------------------------------------------------------------------
// Clock-based concrete semantics over ground nets (all interval endpoints and
// marking counts constant). Three state flavors, selected by which optional
// pieces a state carries:
//   - bare:           marking + clocks                       (tick_flag None)
//   - alternating:    + tick flag forbidding tick after tick (starts TickOk)
//   - time-carrying:  + accumulated global time
// Every transition of the net owns a clock; clocks of transitions not enabled
// in the current marking are pinned to exactly 0.

enum class TickFlag : std::uint8_t { None, TickOk, TickNotOk };

struct ConcreteState {
    TickFlag tick_flag = TickFlag::None;
    Bag marking;
    std::map<std::string, Rat> clocks;
    std::optional<Rat> global_time;

    bool operator==(const ConcreteState&) const = default;
};

bool operator<(const ConcreteState& a, const ConcreteState& b);

std::string show(const ConcreteState& s);

struct SemanticsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Throws SemanticsError unless the net is ground.
ConcreteState initial_state(const NetSpec& net, bool with_flag, bool with_time);

// Maximal time elapse: min over active (enabled, not inhibited) transitions
// with a finite upper bound of (upper - clock); nullopt when no such
// transition constrains the delay.
std::optional<Rat> mte(const NetSpec& net, const ConcreteState& s);

// Advances the clocks of active transitions by delta (inhibited and disabled
// clocks stay put). Requires 0 <= delta <= mte, and a TickOk flag when the
// state carries one; the result's flag is TickNotOk. Adds delta to carried
// global time.
ConcreteState tick(const NetSpec& net, const ConcreteState& s, const Rat& delta);

// Fires an active transition whose clock lies within its static interval
// (inactivity and a clock outside the interval are reported distinctly).
// The fired transition's clock resets to 0; any transition not enabled in the
// intermediate marking (m - pre) has its clock reset; sets the flag to TickOk.
ConcreteState fire(const NetSpec& net, const ConcreteState& s, const std::string& label);

// Exact evaluation of a ground proposition. Clock atoms read the transition
// clocks; in-time atoms require a time-carrying state (SemanticsError
// otherwise). Parameters in the proposition's expressions are an error.
bool holds_concrete(const Prop& p, const ConcreteState& s, const NetSpec& net);

// ---------------------------------------------------------------------------
// Interval-shifting reference semantics (test oracle). States pair a marking
// with one firing interval per transition; time shifts every interval down
// except those of transitions that are enabled AND inhibited, which hold.
// Lower endpoints clamp at 0; upper endpoints of disabled transitions may go
// negative (reproduced deliberately). Not exposed on the CLI.

struct IntervalState {
    Bag marking;
    // transition label -> (lower, upper); nullopt upper = unbounded
    std::map<std::string, std::pair<Rat, std::optional<Rat>>> intervals;

    bool operator==(const IntervalState&) const = default;
};

IntervalState interval_initial(const NetSpec& net);

// Time may pass only while no enabled transition's shifted upper endpoint
// would drop below 0.
IntervalState interval_time_step(const NetSpec& net, const IntervalState& s, const Rat& delta);

// Fires an active transition whose interval's lower endpoint has reached 0;
// newly enabled transitions (including the fired one if it re-enables) get
// their static interval back, all others keep the shifted one.
IntervalState interval_fire_step(const NetSpec& net, const IntervalState& s,
                                 const std::string& label);

// ---------------------------------------------------------------------------
// Explicit-state exploration of the time-sampled transition system: discrete
// firings plus a fixed-duration tick.

struct TraceStep {
    enum class Kind : std::uint8_t { Tick, Fire };
    Kind kind = Kind::Tick;
    Rat delta;          // Tick payload
    std::string label;  // Fire payload

    bool operator==(const TraceStep&) const = default;

    static TraceStep tick_of(Rat d);
    static TraceStep fire_of(std::string label);
};

std::string show(const TraceStep& st);

ConcreteState apply_step(const NetSpec& net, const ConcreteState& s, const TraceStep& st);

struct SearchOpts {
    Rat step = 1;                        // tick duration
    std::optional<Rat> time_bound;       // ticks stop once global_time + step exceeds it
    int max_sols = 1;
    std::size_t max_states = 10000;      // visited-state budget
    std::optional<std::size_t> max_depth;
};

struct SearchHit {
    ConcreteState state;
    std::vector<TraceStep> path;  // from the initial state
};

struct SearchResult {
    std::vector<SearchHit> hits;
    bool budget_exceeded = false;  // distinct from "no solution"
    std::size_t states_seen = 0;
};

// Breadth-first search for states satisfying the goal; firings are explored
// in net declaration order before the tick, so the first hit is a shortest
// witness. Global time is carried iff a time bound is set or the goal
// mentions in-time.
SearchResult sampled_search(const NetSpec& net, const Prop& goal, const SearchOpts& opts);

// ---------------------------------------------------------------------------
// The whole sampled graph, for the LTL checker and for semantics-variant
// comparisons.

struct GraphOpts {
    Rat step = 1;
    bool with_flag = false;  // enforce tick alternation; a single tick edge
                             // then covers every multiple of `step` up to mte
    bool with_time = false;  // carry global time
    std::optional<Rat> time_bound;
    std::size_t max_states = 10000;
    bool stutter_deadlocks = false;  // self-loop states with no successor
};

struct SampledGraph {
    struct Edge {
        std::size_t to = 0;
        TraceStep step;
    };

    std::vector<ConcreteState> states;  // [0] is the initial state
    std::vector<std::vector<Edge>> succs;
    bool budget_exceeded = false;
};

SampledGraph build_sampled_graph(const NetSpec& net, const GraphOpts& opts);

}  // namespace tempo
