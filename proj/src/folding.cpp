#include "tempo/folding.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <utility>

namespace tempo {

// ---------------------------------------------------------------------------
// Projection and subsumption

ProjectedState project_now(const NetSpec& net, const SymState& s,
                           const Observation& obs) {
    ProjectedState out;
    out.tick_flag = s.tick_flag;
    Constraint c = s.constraint;
    for (const std::string& p : net.places) {
        VarId v = now_var(p);
        c.add(make_atom(LinExpr::var(v), Rel::EQ, s.marking.at(p)));
        out.marking_shape.emplace_back(p, v);
    }
    for (const Transition& t : net.transitions) {
        VarId v = clock_var(t.label);
        auto it = s.clocks.find(t.label);
        c.add(make_atom(LinExpr::var(v), Rel::EQ,
                        it == s.clocks.end() ? LinExpr{} : it->second));
        out.clock_shape.emplace_back(t.label, v);
    }
    if (s.global_time) {
        VarId v = time_now_var();
        c.add(make_atom(LinExpr::var(v), Rel::EQ, *s.global_time));
        out.global_time_var = v;
    }
    if (obs.expr) {
        VarId v = clock_var("#obs");
        c.add(make_atom(LinExpr::var(v), Rel::EQ, *obs.expr));
        out.extra_var = v;
    }
    std::set<VarId> history;
    for (const VarId& v : c.vars())
        if (v.kind == VarKind::Delta) history.insert(v);
    out.constraint = simplify(eliminate(history, c));
    return out;
}

CanonicalKey canonical_key(const NetSpec& net, const SymState& s, int tag) {
    CanonicalKey k;
    k.tick_flag = s.tick_flag;
    k.tag = tag;
    if (s.marking.is_ground()) {
        k.fingerprint = "G";
        for (const std::string& p : net.places) {
            k.fingerprint += '|';
            k.fingerprint += p;
            k.fingerprint += ':';
            k.fingerprint += show(s.marking.at(p).constant);
        }
    } else {
        // Parametric entries: key on which places are structurally marked
        // (non-zero expression); the projected constraints carry the rest.
        k.fingerprint = "S";
        for (const std::string& p : net.places) {
            LinExpr e = s.marking.at(p);
            if (!e.terms.empty() || e.constant != 0) {
                k.fingerprint += '|';
                k.fingerprint += p;
            }
        }
    }
    return k;
}

bool subsumes(const NetSpec& net, const SymState& u, const SymState& v) {
    if (canonical_key(net, u) != canonical_key(net, v)) return false;
    return implies(project_now(net, u).constraint,
                   project_now(net, v).constraint);
}

bool VisitedMap::covers(const CanonicalKey& k, const ProjectedState& p) const {
    auto it = entries.find(k);
    if (it == entries.end()) return false;
    return implies(p.constraint, it->second);
}

void VisitedMap::add(const CanonicalKey& k, const ProjectedState& p) {
    entries[k].disjuncts.push_back(p.constraint);
}

std::size_t VisitedMap::states() const {
    std::size_t n = 0;
    for (const auto& [k, f] : entries) n += f.disjuncts.size();
    return n;
}

// ---------------------------------------------------------------------------
// Engines

std::optional<Engine> parse_engine(std::string_view name) {
    if (name == "sym") return Engine::Sym;
    if (name == "sym2") return Engine::Sym2;
    if (name == "fold-branch") return Engine::FoldBranch;
    if (name == "fold-global") return Engine::FoldGlobal;
    return std::nullopt;
}

std::string show(Engine e) {
    switch (e) {
        case Engine::Sym: return "sym";
        case Engine::Sym2: return "sym2";
        case Engine::FoldBranch: return "fold-branch";
        case Engine::FoldGlobal: return "fold-global";
    }
    throw std::logic_error("show(Engine): bad value");
}

namespace {

// Successors with the fire-priority restriction applied. Time steps always
// pass through; among fire steps, the first priority label that can fire
// anywhere from s keeps only its successors, and if none of the listed
// labels can fire, every fire step is kept (the restriction is a preference,
// not a hard filter).
std::vector<SymEdge> restricted_successors(const NetSpec& net, const SymState& s,
                                           const ReachOpts& opts) {
    std::vector<SymEdge> all = sym_successors(net, s, opts.variant);
    if (opts.priority.empty()) return all;
    std::vector<SymEdge> kept, fires;
    for (SymEdge& e : all)
        (e.label.rfind("tick(", 0) == 0 ? kept : fires).push_back(std::move(e));
    for (const std::string& want : opts.priority) {
        bool any = false;
        for (SymEdge& e : fires)
            if (e.label == want) {
                kept.push_back(std::move(e));
                any = true;
            }
        if (any) return kept;
    }
    for (SymEdge& e : fires) kept.push_back(std::move(e));
    return kept;
}

// Check the goal on a kept state and append one Witness per satisfiable way
// of meeting it. The matched goal case is conjoined into the recorded
// constraint *before* the parameter projection, so parameters that only the
// goal relates (marking parameters, time-window bounds) still shape the
// reported region. Returns true once the solution cap is reached.
bool emit_witnesses(const NetSpec& net, const SymState& s,
                    const std::vector<std::string>& path, const Prop& goal,
                    const ReachOpts& opts, ReachResult& out) {
    Formula cases = conjoin(Formula::of(s.constraint), encode(goal, s, net));
    for (const Constraint& d : cases.disjuncts) {
        if (out.witnesses.size() >= opts.max_sols) break;
        if (!is_sat(d)) continue;
        Witness w;
        w.marking = s.marking;
        w.full_constraint = simplify(d);
        w.param_constraint =
            project(w.full_constraint, [](const VarId& v) { return is_param(v); });
        w.path = path;
        out.witnesses.push_back(std::move(w));
    }
    return out.witnesses.size() >= opts.max_sols;
}

}  // namespace

ReachResult plain_reach(const NetSpec& net, const SymState& init,
                        const Prop& goal, const ReachOpts& opts) {
    ReachResult out;
    struct Node {
        SymState state;
        std::vector<std::string> path;
        std::size_t depth = 0;
    };
    out.states = 1;
    bool stopped = emit_witnesses(net, init, {}, goal, opts, out);
    bool cut = false;
    std::deque<Node> queue;
    if (!stopped) queue.push_back({init, {}, 0});
    while (!queue.empty() && !stopped && !cut) {
        Node n = std::move(queue.front());
        queue.pop_front();
        if (n.depth >= opts.max_depth) {
            cut = true;  // children would exceed the depth budget
            continue;
        }
        for (SymEdge& e : restricted_successors(net, n.state, opts)) {
            if (out.states >= opts.max_states) {
                cut = true;
                break;
            }
            ++out.states;
            std::vector<std::string> path = n.path;
            path.push_back(e.label);
            if (emit_witnesses(net, e.to, path, goal, opts, out)) {
                stopped = true;
                break;
            }
            queue.push_back({std::move(e.to), std::move(path), n.depth + 1});
        }
    }
    out.exhausted = !stopped && !cut && queue.empty();
    return out;
}

ReachResult fold_reach_branch(const NetSpec& net, const SymState& init,
                              const Prop& goal, const ReachOpts& opts) {
    ReachResult out;
    VisitedMap local;  // covers the current path only; undone on backtrack
    struct Frame {
        std::vector<SymEdge> succs;
        std::size_t next = 0;
        CanonicalKey key;  // the expanded state's own map entry, for undo
    };
    out.states = 1;
    bool stopped = emit_witnesses(net, init, {}, goal, opts, out);
    bool cut = false;
    std::vector<Frame> stack;
    std::vector<std::string> path;
    if (!stopped) {
        CanonicalKey k0 = canonical_key(net, init);
        local.add(k0, project_now(net, init));
        stack.push_back({restricted_successors(net, init, opts), 0, std::move(k0)});
    }
    while (!stack.empty() && !stopped && !cut) {
        Frame& top = stack.back();
        if (top.next >= top.succs.size()) {
            // Backtrack: this state leaves the path, so its disjunct leaves
            // the map. Same-key disjuncts stack in path order, so the last
            // one under the key is this frame's.
            auto it = local.entries.find(top.key);
            it->second.disjuncts.pop_back();
            if (it->second.disjuncts.empty()) local.entries.erase(it);
            stack.pop_back();
            if (!path.empty()) path.pop_back();
            continue;
        }
        SymEdge e = std::move(top.succs[top.next++]);
        CanonicalKey k = canonical_key(net, e.to);
        ProjectedState proj = project_now(net, e.to);
        if (local.covers(k, proj)) continue;  // folded into its own path
        if (stack.size() > opts.max_depth) {
            cut = true;
            continue;
        }
        if (out.states >= opts.max_states) {
            cut = true;
            break;
        }
        ++out.states;
        path.push_back(e.label);
        if (emit_witnesses(net, e.to, path, goal, opts, out)) {
            stopped = true;
            break;
        }
        local.add(k, proj);
        stack.push_back({restricted_successors(net, e.to, opts), 0, std::move(k)});
    }
    out.exhausted = !stopped && !cut && stack.empty();
    return out;
}

namespace {

struct Candidate {
    SymState state;
    std::vector<std::string> path;
    CanonicalKey key;
    ProjectedState proj;
    // Covered by the wave-start snapshot of the global map. The map only
    // grows, so a snapshot cover is final and the candidate can be dropped
    // without a second look.
    bool covered = false;
};

struct WaveNode {
    SymState state;
    std::vector<std::string> path;
};

void expand_node(const NetSpec& net, const WaveNode& n, const ReachOpts& opts,
                 const VisitedMap& snapshot, std::vector<Candidate>& out) {
    for (SymEdge& e : restricted_successors(net, n.state, opts)) {
        Candidate c;
        c.path = n.path;
        c.path.push_back(e.label);
        c.key = canonical_key(net, e.to);
        c.proj = project_now(net, e.to);
        c.covered = snapshot.covers(c.key, c.proj);
        c.state = std::move(e.to);
        out.push_back(std::move(c));
    }
}

// Serial reference kernel: candidates in frontier order, successor order.
std::vector<Candidate> expand_wave_serial(const NetSpec& net,
                                          const std::vector<WaveNode>& wave,
                                          const ReachOpts& opts,
                                          const VisitedMap& snapshot) {
    std::vector<Candidate> out;
    for (const WaveNode& n : wave) expand_node(net, n, opts, snapshot, out);
    return out;
}

// Parallel kernel: frontier nodes expand on an OpenMP team, each into its own
// slot, then slots concatenate in frontier order — the exact candidate
// sequence of the serial kernel, so the merge below behaves identically for
// any worker count.
std::vector<Candidate> expand_wave_parallel(const NetSpec& net,
                                            const std::vector<WaveNode>& wave,
                                            const ReachOpts& opts,
                                            const VisitedMap& snapshot,
                                            int workers) {
#ifdef _OPENMP
    std::vector<std::vector<Candidate>> parts(wave.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(wave.size()); ++i)
        expand_node(net, wave[static_cast<std::size_t>(i)], opts, snapshot,
                    parts[static_cast<std::size_t>(i)]);
    std::vector<Candidate> out;
    for (auto& part : parts)
        for (Candidate& c : part) out.push_back(std::move(c));
    return out;
#else
    (void)workers;
    return expand_wave_serial(net, wave, opts, snapshot);
#endif
}

}  // namespace

ReachResult fold_reach_global(const NetSpec& net, const SymState& init,
                              const Prop& goal, const ReachOpts& opts) {
    ReachResult out;
    VisitedMap map;
    map.add(canonical_key(net, init), project_now(net, init));
    out.states = 1;
    bool stopped = emit_witnesses(net, init, {}, goal, opts, out);
    bool cut = false;
    std::vector<WaveNode> wave;
    if (!stopped) wave.push_back({init, {}});
    std::size_t depth = 0;
    while (!wave.empty() && !stopped && !cut) {
        if (depth >= opts.max_depth) {
            cut = true;  // the next wave would exceed the depth budget
            break;
        }
        std::vector<Candidate> cands =
            opts.workers > 1
                ? expand_wave_parallel(net, wave, opts, map, opts.workers)
                : expand_wave_serial(net, wave, opts, map);
        std::vector<WaveNode> next;
        for (Candidate& c : cands) {
            if (c.covered) continue;
            // Re-check against the live map: an earlier candidate of this
            // same wave may have just been inserted and cover this one.
            if (map.covers(c.key, c.proj)) continue;
            if (out.states >= opts.max_states) {
                cut = true;
                break;
            }
            ++out.states;
            map.add(c.key, c.proj);
            if (emit_witnesses(net, c.state, c.path, goal, opts, out)) {
                stopped = true;
                break;
            }
            next.push_back({std::move(c.state), std::move(c.path)});
        }
        wave = std::move(next);
        ++depth;
    }
    out.exhausted = !stopped && !cut && wave.empty();
    out.visited = std::move(map);
    return out;
}

ReachResult reach(const NetSpec& net, const SymState& init, const Prop& goal,
                  Engine engine, const ReachOpts& opts) {
    switch (engine) {
        case Engine::Sym:
            return plain_reach(net, init, goal, opts);
        case Engine::Sym2: {
            if (init.global_time)
                throw SemanticsError(
                    "engine sym2 explores strict tick/fire alternation and does "
                    "not track global time");
            ReachOpts o = opts;
            o.variant = TheoryVariant::r3s();
            return plain_reach(net, init, goal, o);
        }
        case Engine::FoldBranch:
            return fold_reach_branch(net, init, goal, opts);
        case Engine::FoldGlobal:
            return fold_reach_global(net, init, goal, opts);
    }
    throw std::logic_error("reach: bad engine value");
}

}  // namespace tempo
