#include "tempo/concrete.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace tempo {

bool operator<(const ConcreteState& a, const ConcreteState& b) {
    return std::tie(a.tick_flag, a.marking.entries, a.clocks, a.global_time) <
           std::tie(b.tick_flag, b.marking.entries, b.clocks, b.global_time);
}

std::string show(const ConcreteState& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& [place, n] : s.marking.entries) {
        if (!first) out += " ";
        first = false;
        out += place + ":" + std::to_string(n);
    }
    out += "}";
    for (const auto& [label, c] : s.clocks) out += " " + label + "=" + show(c);
    if (s.global_time) out += " time=" + show(*s.global_time);
    if (s.tick_flag == TickFlag::TickNotOk) out += " [after-tick]";
    return out;
}

namespace {

void require_ground(const NetSpec& net) {
    if (!net.time_params.empty() || !net.mark_params.empty())
        throw SemanticsError("net " + net.name +
                             " has free parameters; instantiate them first");
}

std::pair<Rat, std::optional<Rat>> static_interval(const Transition& t) {
    std::pair<Rat, std::optional<Rat>> out{t.interval.lower.eval({}), std::nullopt};
    if (t.interval.upper) out.second = t.interval.upper->eval({});
    return out;
}

std::string show_interval(const Rat& lo, const std::optional<Rat>& hi) {
    return "[" + show(lo) + ", " + (hi ? show(*hi) : std::string("inf")) + "]";
}

bool clock_in_interval(const Rat& c, const std::pair<Rat, std::optional<Rat>>& iv) {
    return c >= iv.first && (!iv.second || c <= *iv.second);
}

}  // namespace

ConcreteState initial_state(const NetSpec& net, bool with_flag, bool with_time) {
    require_ground(net);
    ConcreteState s;
    s.tick_flag = with_flag ? TickFlag::TickOk : TickFlag::None;
    s.marking = net.initial_marking.as_ground();
    for (const Transition& t : net.transitions) s.clocks[t.label] = 0;
    if (with_time) s.global_time = 0;
    return s;
}

std::optional<Rat> mte(const NetSpec& net, const ConcreteState& s) {
    std::optional<Rat> best;
    for (const Transition& t : net.transitions) {
        if (!active(s.marking, t)) continue;
        auto [lo, hi] = static_interval(t);
        (void)lo;
        if (!hi) continue;
        Rat slack = *hi - s.clocks.at(t.label);
        if (!best || slack < *best) best = slack;
    }
    return best;
}

ConcreteState tick(const NetSpec& net, const ConcreteState& s, const Rat& delta) {
    if (delta < 0) throw SemanticsError("negative time step " + show(delta));
    if (s.tick_flag == TickFlag::TickNotOk)
        throw SemanticsError("time cannot pass twice in a row under tick alternation");
    if (auto bound = mte(net, s); bound && delta > *bound)
        throw SemanticsError("time step " + show(delta) +
                             " exceeds the maximal time elapse " + show(*bound));
    ConcreteState out = s;
    for (const Transition& t : net.transitions)
        if (active(s.marking, t)) out.clocks[t.label] += delta;
    if (out.tick_flag != TickFlag::None) out.tick_flag = TickFlag::TickNotOk;
    if (out.global_time) *out.global_time += delta;
    return out;
}

ConcreteState fire(const NetSpec& net, const ConcreteState& s, const std::string& label) {
    const Transition* t = net.find(label);
    if (!t) throw SemanticsError("unknown transition " + label);
    if (!enabled(s.marking, *t))
        throw SemanticsError("transition " + label + " is not enabled");
    if (inhibited(s.marking, *t))
        throw SemanticsError("transition " + label + " is inhibited");
    auto iv = static_interval(*t);
    const Rat& c = s.clocks.at(label);
    if (!clock_in_interval(c, iv))
        throw SemanticsError("clock of " + label + " is " + show(c) +
                             ", outside its firing interval " +
                             show_interval(iv.first, iv.second));

    ConcreteState out = s;
    Bag interm = bag_sub(s.marking, t->pre);
    out.marking = bag_add(interm, t->post);
    for (const Transition& other : net.transitions) {
        if (other.label == label || !enabled(interm, other)) out.clocks[other.label] = 0;
    }
    if (out.tick_flag != TickFlag::None) out.tick_flag = TickFlag::TickOk;
    return out;
}

// ---- proposition evaluation -------------------------------------------------

namespace {

Rat ground_val(const LinExpr& e) {
    try {
        return e.eval({});
    } catch (const EvalError&) {
        throw SemanticsError(
            "proposition mentions parameters; concrete evaluation needs ground values");
    }
}

const Rat& clock_of(const ConcreteState& s, const std::string& label) {
    auto it = s.clocks.find(label);
    if (it == s.clocks.end())
        throw SemanticsError("unknown transition " + label + " in proposition");
    return it->second;
}

}  // namespace

bool holds_concrete(const Prop& p, const ConcreteState& s, const NetSpec& net) {
    using K = Prop::Kind;
    switch (p.kind) {
        case K::True: return true;
        case K::False: return false;
        case K::PlaceCmp:
            if (!net.has_place(p.a))
                throw SemanticsError("unknown place " + p.a + " in proposition");
            return cmp_holds(Rat(s.marking.at(p.a)), p.rel, ground_val(p.expr));
        case K::ClockCmp: return cmp_holds(clock_of(s, p.a), p.rel, ground_val(p.expr));
        case K::Reach: return bag_leq(p.marking, s.marking);
        case K::KBounded: {
            Rat bound = ground_val(p.expr);
            for (const auto& place : net.places)
                if (Rat(s.marking.at(place)) > bound) return false;
            return true;
        }
        case K::DiffGt: {
            const Rat& c1 = clock_of(s, p.a);
            const Rat& c2 = clock_of(s, p.b);
            Rat r = ground_val(p.expr);
            return c1 - c2 > r || c2 - c1 > r;
        }
        case K::InTime: {
            if (!s.global_time)
                throw SemanticsError(
                    "in-time needs a state that tracks elapsed time");
            const Rat& gt = *s.global_time;
            if (gt < ground_val(p.window.lower)) return false;
            return !p.window.upper || gt <= ground_val(*p.window.upper);
        }
        case K::Not: return !holds_concrete(p.kids.front(), s, net);
        case K::And:
            return std::all_of(p.kids.begin(), p.kids.end(), [&](const Prop& k) {
                return holds_concrete(k, s, net);
            });
        case K::Or:
            return std::any_of(p.kids.begin(), p.kids.end(), [&](const Prop& k) {
                return holds_concrete(k, s, net);
            });
    }
    return false;
}

// ---- interval-shifting oracle -------------------------------------------------

IntervalState interval_initial(const NetSpec& net) {
    require_ground(net);
    IntervalState s;
    s.marking = net.initial_marking.as_ground();
    for (const Transition& t : net.transitions) s.intervals[t.label] = static_interval(t);
    return s;
}

IntervalState interval_time_step(const NetSpec& net, const IntervalState& s,
                                 const Rat& delta) {
    if (delta < 0) throw SemanticsError("negative time step " + show(delta));
    IntervalState out;
    out.marking = s.marking;
    for (const Transition& t : net.transitions) {
        auto cur = s.intervals.at(t.label);
        bool hold = enabled(s.marking, t) && inhibited(s.marking, t);
        auto next = cur;
        if (!hold) {
            next.first = std::max(Rat(0), cur.first - delta);
            if (next.second) *next.second -= delta;
        }
        if (enabled(s.marking, t) && next.second && *next.second < 0)
            throw SemanticsError("time step " + show(delta) +
                                 " drives the deadline of enabled transition " + t.label +
                                 " negative");
        out.intervals[t.label] = next;
    }
    return out;
}

IntervalState interval_fire_step(const NetSpec& net, const IntervalState& s,
                                 const std::string& label) {
    const Transition* t = net.find(label);
    if (!t) throw SemanticsError("unknown transition " + label);
    if (!enabled(s.marking, *t))
        throw SemanticsError("transition " + label + " is not enabled");
    if (inhibited(s.marking, *t))
        throw SemanticsError("transition " + label + " is inhibited");
    const Rat& lo = s.intervals.at(label).first;
    if (lo != 0)
        throw SemanticsError("transition " + label +
                             " cannot fire yet: its interval lower bound is " + show(lo));

    IntervalState out;
    out.marking = bag_add(bag_sub(s.marking, t->pre), t->post);
    for (const Transition& other : net.transitions) {
        out.intervals[other.label] = newly_enabled(other, s.marking, *t)
                                         ? static_interval(other)
                                         : s.intervals.at(other.label);
    }
    return out;
}

// ---- sampled exploration -------------------------------------------------------

TraceStep TraceStep::tick_of(Rat d) {
    TraceStep st;
    st.kind = Kind::Tick;
    st.delta = std::move(d);
    return st;
}

TraceStep TraceStep::fire_of(std::string label) {
    TraceStep st;
    st.kind = Kind::Fire;
    st.label = std::move(label);
    return st;
}

std::string show(const TraceStep& st) {
    return st.kind == TraceStep::Kind::Tick ? "tick " + show(st.delta) : "fire " + st.label;
}

ConcreteState apply_step(const NetSpec& net, const ConcreteState& s, const TraceStep& st) {
    return st.kind == TraceStep::Kind::Tick ? tick(net, s, st.delta) : fire(net, s, st.label);
}

namespace {

// Firings available from a state, in net declaration order.
std::vector<std::string> fireable(const NetSpec& net, const ConcreteState& s) {
    std::vector<std::string> out;
    for (const Transition& t : net.transitions) {
        if (active(s.marking, t) && clock_in_interval(s.clocks.at(t.label), static_interval(t)))
            out.push_back(t.label);
    }
    return out;
}

}  // namespace

SearchResult sampled_search(const NetSpec& net, const Prop& goal, const SearchOpts& opts) {
    if (opts.step <= 0) throw SemanticsError("sampling step must be positive");
    bool with_time = opts.time_bound.has_value() || mentions_time(goal);
    ConcreteState s0 = initial_state(net, false, with_time);

    struct Node {
        ConcreteState state;
        int parent = -1;
        TraceStep via;
        std::size_t depth = 0;
    };
    std::vector<Node> nodes;
    std::set<ConcreteState> visited;
    SearchResult out;

    auto path_to = [&](int i) {
        std::vector<TraceStep> path;
        for (int k = i; nodes[k].parent >= 0; k = nodes[k].parent) path.push_back(nodes[k].via);
        std::reverse(path.begin(), path.end());
        return path;
    };

    nodes.push_back({s0, -1, {}, 0});
    visited.insert(s0);
    if (holds_concrete(goal, s0, net)) out.hits.push_back({s0, {}});

    std::deque<std::size_t> frontier{0};
    bool done = out.hits.size() >= static_cast<std::size_t>(std::max(opts.max_sols, 0));
    while (!frontier.empty() && !done) {
        std::size_t i = frontier.front();
        frontier.pop_front();
        if (opts.max_depth && nodes[i].depth >= *opts.max_depth) continue;
        const ConcreteState s = nodes[i].state;  // copy: nodes grows below

        std::vector<TraceStep> steps;
        for (const std::string& label : fireable(net, s))
            steps.push_back(TraceStep::fire_of(label));
        auto bound = mte(net, s);
        bool tick_ok = !bound || opts.step <= *bound;
        if (tick_ok && opts.time_bound && *s.global_time + opts.step > *opts.time_bound)
            tick_ok = false;
        if (tick_ok) steps.push_back(TraceStep::tick_of(opts.step));

        for (const TraceStep& st : steps) {
            ConcreteState ns = apply_step(net, s, st);
            if (visited.count(ns)) continue;
            if (visited.size() >= opts.max_states) {
                out.budget_exceeded = true;
                done = true;
                break;
            }
            visited.insert(ns);
            nodes.push_back({ns, static_cast<int>(i), st, nodes[i].depth + 1});
            std::size_t ni = nodes.size() - 1;
            frontier.push_back(ni);
            if (holds_concrete(goal, ns, net)) {
                out.hits.push_back({ns, path_to(static_cast<int>(ni))});
                if (out.hits.size() >= static_cast<std::size_t>(opts.max_sols)) {
                    done = true;
                    break;
                }
            }
        }
    }
    out.states_seen = visited.size();
    return out;
}

SampledGraph build_sampled_graph(const NetSpec& net, const GraphOpts& opts) {
    if (opts.step <= 0) throw SemanticsError("sampling step must be positive");
    SampledGraph g;
    std::map<ConcreteState, std::size_t> index;
    std::deque<std::size_t> frontier;

    auto intern = [&](const ConcreteState& s) -> std::optional<std::size_t> {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        if (g.states.size() >= opts.max_states) {
            g.budget_exceeded = true;
            return std::nullopt;
        }
        std::size_t id = g.states.size();
        g.states.push_back(s);
        g.succs.emplace_back();
        index.emplace(s, id);
        frontier.push_back(id);
        return id;
    };

    intern(initial_state(net, opts.with_flag, opts.with_time || opts.time_bound.has_value()));

    while (!frontier.empty() && !g.budget_exceeded) {
        std::size_t i = frontier.front();
        frontier.pop_front();
        const ConcreteState s = g.states[i];  // copy: g.states grows below

        for (const std::string& label : fireable(net, s)) {
            auto id = intern(fire(net, s, label));
            if (!id) break;
            g.succs[i].push_back({*id, TraceStep::fire_of(label)});
        }
        if (g.budget_exceeded) break;

        if (s.tick_flag == TickFlag::TickNotOk) continue;
        auto bound = mte(net, s);
        std::optional<ConcreteState> prev;
        for (int k = 1;; ++k) {
            Rat delta = opts.step * Rat(k);
            if (bound && delta > *bound) break;
            if (opts.time_bound && *s.global_time + delta > *opts.time_bound) break;
            ConcreteState ns = tick(net, s, delta);
            if (prev && ns == *prev) break;  // longer ticks make no further progress
            prev = ns;
            auto id = intern(ns);
            if (!id) break;
            g.succs[i].push_back({*id, TraceStep::tick_of(delta)});
            if (!opts.with_flag) break;  // without alternation, one step at a time
        }
    }

    if (opts.stutter_deadlocks && !g.budget_exceeded) {
        for (std::size_t i = 0; i < g.states.size(); ++i)
            if (g.succs[i].empty()) g.succs[i].push_back({i, TraceStep::tick_of(0)});
    }
    return g;
}

}  // namespace tempo
