#pragma once

#include "tempo/concrete.hpp"
#include "util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tempo::testutil {

inline std::pair<Rat, std::optional<Rat>> static_interval_of(const Transition& t) {
    std::pair<Rat, std::optional<Rat>> out{t.interval.lower.eval({}), std::nullopt};
    if (t.interval.upper) out.second = t.interval.upper->eval({});
    return out;
}

// Runs one random alternating tick/fire schedule simultaneously on the clock
// semantics and the interval-shifting oracle, checking the correspondence at
// every step:
//   - equal markings and equal sets of fireable transitions,
//   - for every enabled transition with a finite static upper bound,
//     clock = static_upper - interval_upper,
//   - for every enabled transition, interval_lower = max(0, static_lower - clock),
//   - both sides accept legal delays and both reject delays beyond the bound.
// Returns a description of the first violation, or nullopt if the run is clean.
inline std::optional<std::string> paired_walk(const NetSpec& net, std::mt19937_64& g,
                                              int steps) {
    ConcreteState cs = initial_state(net, false, false);
    IntervalState is = interval_initial(net);

    for (int step = 0; step <= steps; ++step) {
        if (cs.marking != is.marking) return "markings diverged at step " + std::to_string(step);

        std::vector<std::string> clock_fires, interval_fires;
        for (const Transition& t : net.transitions) {
            if (!active(cs.marking, t)) continue;
            auto [lo, hi] = static_interval_of(t);
            const Rat& c = cs.clocks.at(t.label);
            if (c >= lo && (!hi || c <= *hi)) clock_fires.push_back(t.label);
            if (is.intervals.at(t.label).first == 0) interval_fires.push_back(t.label);
        }
        if (clock_fires != interval_fires)
            return "fireable sets diverged at step " + std::to_string(step);

        for (const Transition& t : net.transitions) {
            if (!enabled(cs.marking, t)) continue;
            auto [lo, hi] = static_interval_of(t);
            const Rat& c = cs.clocks.at(t.label);
            const auto& iv = is.intervals.at(t.label);
            if (hi && (!iv.second || *iv.second != *hi - c))
                return "clock/upper correspondence broke for " + t.label + " at step " +
                       std::to_string(step);
            if (iv.first != std::max(Rat(0), lo - c))
                return "clock/lower correspondence broke for " + t.label + " at step " +
                       std::to_string(step);
        }
        if (step == steps) break;

        auto bound = mte(net, cs);
        if (bound && uniform(g, 0, 7) == 0) {
            // both sides must reject a delay beyond the maximal time elapse
            Rat bad = *bound + 1;
            bool clock_rejected = false, oracle_rejected = false;
            try {
                tick(net, cs, bad);
            } catch (const SemanticsError&) {
                clock_rejected = true;
            }
            try {
                interval_time_step(net, is, bad);
            } catch (const SemanticsError&) {
                oracle_rejected = true;
            }
            if (!clock_rejected || !oracle_rejected)
                return "delay beyond the bound not rejected on both sides at step " +
                       std::to_string(step);
        }

        if (!clock_fires.empty() && uniform(g, 0, 1) == 0) {
            const std::string& label = clock_fires[uniform(g, 0, (int)clock_fires.size() - 1)];
            cs = fire(net, cs, label);
            is = interval_fire_step(net, is, label);
        } else {
            Rat delta = Rat(uniform(g, 0, 8)) / uniform(g, 1, 3);
            if (bound && delta > *bound) delta = *bound;
            cs = tick(net, cs, delta);
            try {
                is = interval_time_step(net, is, delta);
            } catch (const SemanticsError&) {
                return "oracle rejected a legal delay at step " + std::to_string(step);
            }
        }
    }
    return std::nullopt;
}

// Random tick/fire walk on the clock semantics alone. Calls visit(state, delta)
// after every step, where delta is the tick duration (0 for fire steps).
template <typename Visit>
void random_walk(const NetSpec& net, std::mt19937_64& g, int steps, bool with_time,
                 Visit&& visit) {
    ConcreteState s = initial_state(net, false, with_time);
    for (int step = 0; step < steps; ++step) {
        std::vector<std::string> fires;
        for (const Transition& t : net.transitions) {
            if (!active(s.marking, t)) continue;
            auto [lo, hi] = static_interval_of(t);
            const Rat& c = s.clocks.at(t.label);
            if (c >= lo && (!hi || c <= *hi)) fires.push_back(t.label);
        }
        if (!fires.empty() && uniform(g, 0, 1) == 0) {
            s = fire(net, s, fires[uniform(g, 0, (int)fires.size() - 1)]);
            visit(s, Rat(0));
        } else {
            Rat delta = Rat(uniform(g, 0, 8)) / uniform(g, 1, 3);
            auto bound = mte(net, s);
            if (bound && delta > *bound) delta = *bound;
            s = tick(net, s, delta);
            visit(s, delta);
        }
    }
}

}  // namespace tempo::testutil
