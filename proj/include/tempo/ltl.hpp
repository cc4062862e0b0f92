#pragma once

#include "tempo/concrete.hpp"

namespace tempo {

struct LtlOpts {
    Rat step = 1;                   // tick duration of the sampled graph
    std::size_t max_states = 10000; // sampled-state budget
    std::optional<Rat> time_bound;  // cap elapsed time; required for in-time
                                    // atoms unless the timed space is finite
};

// Verdict of checking an LTL formula over all infinite runs of the sampled
// transition system (deadlocked states stutter). A failed check carries a
// lasso-shaped counterexample: prefix states, then a cycle repeated forever.
// prefix_steps[i] leads out of prefix[i] (the last one into cycle[0]);
// cycle_steps[i] leads out of cycle[i] (the last one back to cycle[0]).
struct LtlResult {
    bool holds = true;
    std::vector<ConcreteState> prefix, cycle;
    std::vector<TraceStep> prefix_steps, cycle_steps;
};

// Tableau-based check of full propositional LTL over state propositions,
// interpreted on the time-sampled graph of a ground net. Atoms are evaluated
// exactly. Throws SemanticsError("state space too large ...") when a budget
// is exceeded -- an error, never a verdict.
LtlResult ltl_check(const NetSpec& net, const Ltl& formula, const LtlOpts& opts);

}  // namespace tempo
