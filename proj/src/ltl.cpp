#include "tempo/ltl.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <tuple>

namespace tempo {

namespace {

// ---------------------------------------------------------------------------
// Negation normal form over {Atom, And, Or, Next, Until, Release}. The
// modalities <> and [] are expanded into Until/Release; negation is pushed
// down to the atoms, where Prop::negate absorbs it.

Ltl nnf_ltl(const Ltl& f, bool positive) {
    using K = Ltl::Kind;
    switch (f.kind) {
        case K::Atom:
            return Ltl::of(positive ? f.atom : Prop::negate(f.atom));
        case K::Not:
            return nnf_ltl(f.kids[0], !positive);
        case K::And:
        case K::Or: {
            bool conj = (f.kind == K::And) == positive;
            return Ltl::bin(conj ? K::And : K::Or, nnf_ltl(f.kids[0], positive),
                            nnf_ltl(f.kids[1], positive));
        }
        case K::Imp:  // a -> b  ==  ~a \/ b
            return positive ? Ltl::bin(K::Or, nnf_ltl(f.kids[0], false),
                                       nnf_ltl(f.kids[1], true))
                            : Ltl::bin(K::And, nnf_ltl(f.kids[0], true),
                                       nnf_ltl(f.kids[1], false));
        case K::Next:
            return Ltl::un(K::Next, nnf_ltl(f.kids[0], positive));
        case K::Eventually:  // <> a == true U a, ~<> a == false R ~a
            return positive ? Ltl::bin(K::Until, Ltl::of(Prop::truth()),
                                       nnf_ltl(f.kids[0], true))
                            : Ltl::bin(K::Release, Ltl::of(Prop::falsity()),
                                       nnf_ltl(f.kids[0], false));
        case K::Always:  // [] a == false R a, ~[] a == true U ~a
            return positive ? Ltl::bin(K::Release, Ltl::of(Prop::falsity()),
                                       nnf_ltl(f.kids[0], true))
                            : Ltl::bin(K::Until, Ltl::of(Prop::truth()),
                                       nnf_ltl(f.kids[0], false));
        case K::Until:
        case K::Release: {
            bool until = (f.kind == K::Until) == positive;
            return Ltl::bin(until ? K::Until : K::Release, nnf_ltl(f.kids[0], positive),
                            nnf_ltl(f.kids[1], positive));
        }
    }
    return Ltl::of(Prop::falsity());  // unreachable
}

bool ltl_mentions_time(const Ltl& f) {
    if (f.kind == Ltl::Kind::Atom) return mentions_time(f.atom);
    for (const auto& k : f.kids)
        if (ltl_mentions_time(k)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Tableau construction: the formula automaton for the negated property. Nodes
// carry sets of subformula indices; a node is a Buechi state whose atoms must
// hold in the graph state it is paired with.

struct Closure {
    std::vector<Ltl> forms;

    int index(const Ltl& f) {
        for (std::size_t i = 0; i < forms.size(); ++i)
            if (forms[i] == f) return static_cast<int>(i);
        forms.push_back(f);
        return static_cast<int>(forms.size()) - 1;
    }
};

struct TabNode {
    std::set<int> incoming;  // node ids; -1 marks an initial node
    std::set<int> fresh, old, next;
};

struct TableauBuilder {
    Closure clo;
    std::vector<TabNode> nodes;
    static constexpr std::size_t node_cap = 100000;

    void expand(TabNode q) {
        using K = Ltl::Kind;
        if (q.fresh.empty()) {
            for (auto& n : nodes) {
                if (n.old == q.old && n.next == q.next) {
                    n.incoming.insert(q.incoming.begin(), q.incoming.end());
                    return;
                }
            }
            if (nodes.size() >= node_cap)
                throw SemanticsError(
                    "state space too large: the formula automaton exceeded " +
                    std::to_string(node_cap) + " tableau nodes");
            int id = static_cast<int>(nodes.size());
            nodes.push_back(q);
            TabNode succ;
            succ.incoming = {id};
            succ.fresh = q.next;
            expand(std::move(succ));
            return;
        }
        int h = *q.fresh.begin();
        q.fresh.erase(q.fresh.begin());
        if (q.old.count(h)) {
            expand(std::move(q));
            return;
        }
        const Ltl f = clo.forms[h];  // copy: clo.forms may reallocate below
        switch (f.kind) {
            case K::Atom:
                if (f.atom.kind == Prop::Kind::False) return;  // dead branch
                q.old.insert(h);
                expand(std::move(q));
                return;
            case K::And: {
                int a = clo.index(f.kids[0]), b = clo.index(f.kids[1]);
                q.old.insert(h);
                if (!q.old.count(a)) q.fresh.insert(a);
                if (!q.old.count(b)) q.fresh.insert(b);
                expand(std::move(q));
                return;
            }
            case K::Or: {
                int a = clo.index(f.kids[0]), b = clo.index(f.kids[1]);
                TabNode q2 = q;
                q.old.insert(h);
                q2.old.insert(h);
                if (!q.old.count(a)) q.fresh.insert(a);
                if (!q2.old.count(b)) q2.fresh.insert(b);
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case K::Until: {  // a U b  ==  b \/ (a /\ X(a U b))
                int a = clo.index(f.kids[0]), b = clo.index(f.kids[1]);
                TabNode q2 = q;
                q.old.insert(h);
                q2.old.insert(h);
                if (!q.old.count(a)) q.fresh.insert(a);
                q.next.insert(h);
                if (!q2.old.count(b)) q2.fresh.insert(b);
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case K::Release: {  // a R b  ==  (a /\ b) \/ (b /\ X(a R b))
                int a = clo.index(f.kids[0]), b = clo.index(f.kids[1]);
                TabNode q2 = q;
                q.old.insert(h);
                q2.old.insert(h);
                if (!q.old.count(b)) q.fresh.insert(b);
                q.next.insert(h);
                if (!q2.old.count(a)) q2.fresh.insert(a);
                if (!q2.old.count(b)) q2.fresh.insert(b);
                expand(std::move(q));
                expand(std::move(q2));
                return;
            }
            case K::Next:
                q.old.insert(h);
                q.next.insert(clo.index(f.kids[0]));
                expand(std::move(q));
                return;
            default:
                throw SemanticsError("internal: unexpected connective survived normalization");
        }
    }
};

// ---------------------------------------------------------------------------
// Product exploration state.

struct ProdNode {
    int g;  // sampled-graph state
    int q;  // tableau node
    int c;  // degeneralization counter
};

}  // namespace

LtlResult ltl_check(const NetSpec& net, const Ltl& formula, const LtlOpts& opts) {
    // The property holds iff no infinite run satisfies its negation.
    Ltl neg = nnf_ltl(formula, /*positive=*/false);

    TableauBuilder tb;
    int root = tb.clo.index(neg);
    {
        TabNode start;
        start.incoming = {-1};
        start.fresh = {root};
        tb.expand(std::move(start));
    }
    const auto& nodes = tb.nodes;
    const int nn = static_cast<int>(nodes.size());

    // Generalized acceptance: one set per Until subformula; a node is fair
    // for (a U b) when it either discharged b or never promised the until.
    std::vector<std::vector<char>> fair;  // fair[set][node]
    {
        const std::size_t snapshot = tb.clo.forms.size();
        for (std::size_t u = 0; u < snapshot; ++u) {
            if (tb.clo.forms[u].kind != Ltl::Kind::Until) continue;
            int b = tb.clo.index(tb.clo.forms[u].kids[1]);
            std::vector<char> f(nn, 0);
            for (int n = 0; n < nn; ++n)
                f[n] = !nodes[n].old.count(static_cast<int>(u)) || nodes[n].old.count(b);
            fair.push_back(std::move(f));
        }
        if (fair.empty()) fair.emplace_back(nn, 1);  // no untils: all nodes fair
    }
    const int k = static_cast<int>(fair.size());

    // Per-node literal lists (closure indices) and tableau successor lists.
    std::vector<std::vector<int>> nodelits(nn);
    std::vector<std::vector<int>> tsucc(nn);
    std::vector<int> tinit;
    for (int n = 0; n < nn; ++n) {
        for (int h : nodes[n].old)
            if (tb.clo.forms[h].kind == Ltl::Kind::Atom) nodelits[n].push_back(h);
        for (int from : nodes[n].incoming) {
            if (from == -1)
                tinit.push_back(n);
            else
                tsucc[from].push_back(n);
        }
    }

    // The sampled system. Deadlocks stutter so every maximal run is infinite.
    GraphOpts go;
    go.step = opts.step;
    go.with_time = opts.time_bound.has_value() || ltl_mentions_time(formula);
    go.time_bound = opts.time_bound;
    go.max_states = opts.max_states;
    go.stutter_deadlocks = true;
    SampledGraph graph = build_sampled_graph(net, go);
    if (graph.budget_exceeded)
        throw SemanticsError("state space too large: more than " +
                             std::to_string(opts.max_states) + " sampled states");

    // Lazy atom evaluation, memoized per (graph state, closure literal).
    const int ng = static_cast<int>(graph.states.size());
    const std::size_t nforms = tb.clo.forms.size();
    std::vector<std::vector<signed char>> evals(ng);
    auto holds_at = [&](int h, int g) {
        auto& row = evals[g];
        if (row.empty()) row.assign(nforms, -1);
        if (row[h] == -1)
            row[h] = holds_concrete(tb.clo.forms[h].atom, graph.states[g], net) ? 1 : 0;
        return row[h] == 1;
    };
    auto compatible = [&](int q, int g) {
        for (int h : nodelits[q])
            if (!holds_at(h, g)) return false;
        return true;
    };

    // Breadth-first product construction with an explicit edge list. The
    // counter advances when leaving a node fair for the current set; a
    // product node is accepting when it sits in set 0 with counter 0.
    struct PEdge {
        int to;
        TraceStep step;
    };
    std::map<std::tuple<int, int, int>, int> seen;
    std::vector<ProdNode> prod;
    std::vector<std::vector<PEdge>> psucc;
    std::vector<int> pinit;
    static constexpr std::size_t prod_cap = 2000000;

    auto intern = [&](int g, int q, int c) -> int {
        auto key = std::make_tuple(g, q, c);
        auto it = seen.find(key);
        if (it != seen.end()) return it->second;
        if (prod.size() >= prod_cap)
            throw SemanticsError("state space too large: the product exceeded " +
                                 std::to_string(prod_cap) + " nodes");
        int id = static_cast<int>(prod.size());
        seen.emplace(key, id);
        prod.push_back({g, q, c});
        psucc.emplace_back();
        return id;
    };

    for (int q : tinit)
        if (compatible(q, 0)) pinit.push_back(intern(0, q, 0));

    for (std::size_t at = 0; at < prod.size(); ++at) {
        const ProdNode pn = prod[at];
        int c2 = fair[pn.c][pn.q] ? (pn.c + 1) % k : pn.c;
        for (const auto& e : graph.succs[pn.g]) {
            for (int r : tsucc[pn.q]) {
                if (!compatible(r, e.to)) continue;
                int id = intern(e.to, r, c2);  // may grow psucc: sequence before indexing
                psucc[at].push_back({id, e.step});
            }
        }
    }

    const int np = static_cast<int>(prod.size());
    auto accepting = [&](int id) { return prod[id].c == 0 && fair[0][prod[id].q]; };

    // Strongly connected components, iteratively (product graphs get deep).
    std::vector<int> num(np, -1), low(np, 0), comp(np, -1);
    std::vector<char> on(np, 0);
    std::vector<int> stk;
    int counter = 0, ncomp = 0;
    std::vector<char> comp_cyclic;
    {
        std::vector<std::pair<int, std::size_t>> frames;
        for (int r0 : pinit) {
            if (num[r0] != -1) continue;
            frames.emplace_back(r0, 0);
            while (!frames.empty()) {
                auto& [v, ci] = frames.back();
                if (ci == 0) {
                    num[v] = low[v] = counter++;
                    stk.push_back(v);
                    on[v] = 1;
                }
                if (ci < psucc[v].size()) {
                    int w = psucc[v][ci++].to;
                    if (num[w] == -1)
                        frames.emplace_back(w, 0);
                    else if (on[w])
                        low[v] = std::min(low[v], num[w]);
                } else {
                    if (low[v] == num[v]) {
                        int size = 0;
                        while (true) {
                            int w = stk.back();
                            stk.pop_back();
                            on[w] = 0;
                            comp[w] = ncomp;
                            ++size;
                            if (w == v) break;
                        }
                        bool self = false;
                        if (size == 1)
                            for (const auto& e : psucc[v])
                                self = self || e.to == v;
                        comp_cyclic.push_back(size > 1 || self);
                        ++ncomp;
                    }
                    int vv = v;
                    frames.pop_back();
                    if (!frames.empty())
                        low[frames.back().first] = std::min(low[frames.back().first], low[vv]);
                }
            }
        }
    }

    int witness = -1;
    for (int v = 0; v < np && witness == -1; ++v)
        if (accepting(v) && comp_cyclic[comp[v]]) witness = v;

    LtlResult res;
    if (witness == -1) return res;  // the negation has no run: the property holds
    res.holds = false;

    // Lasso: shortest product path from an initial node to the witness, then
    // a cycle through the witness inside its component.
    auto bfs = [&](const std::vector<int>& from, int to, bool restrict_comp) {
        std::vector<int> par(np, -2);
        std::vector<int> via(np, -1);  // edge index into psucc[par]
        std::deque<int> fr;
        for (int s : from) {
            if (par[s] != -2) continue;
            par[s] = -1;
            fr.push_back(s);
        }
        while (!fr.empty()) {
            int v = fr.front();
            fr.pop_front();
            for (std::size_t i = 0; i < psucc[v].size(); ++i) {
                int w = psucc[v][i].to;
                if (restrict_comp && comp[w] != comp[to]) continue;
                if (w == to && par[v] != -2) {
                    // rebuild v's path, then append the closing edge
                    std::vector<std::pair<int, int>> path;  // (node, edge idx)
                    path.emplace_back(v, static_cast<int>(i));
                    while (par[v] != -1) {
                        path.emplace_back(par[v], via[v]);
                        v = par[v];
                    }
                    std::reverse(path.begin(), path.end());
                    return path;
                }
                if (par[w] != -2) continue;
                par[w] = v;
                via[w] = static_cast<int>(i);
                fr.push_back(w);
            }
        }
        return std::vector<std::pair<int, int>>{};
    };

    // Prefix: initial -> witness. Empty when the witness is initial.
    std::vector<std::pair<int, int>> pre;
    if (std::find(pinit.begin(), pinit.end(), witness) == pinit.end())
        pre = bfs(pinit, witness, false);
    std::vector<std::pair<int, int>> cyc = bfs({witness}, witness, true);

    for (auto [v, ei] : pre) {
        res.prefix.push_back(graph.states[prod[v].g]);
        res.prefix_steps.push_back(psucc[v][ei].step);
    }
    for (auto [v, ei] : cyc) {
        res.cycle.push_back(graph.states[prod[v].g]);
        res.cycle_steps.push_back(psucc[v][ei].step);
    }
    return res;
}

}  // namespace tempo
