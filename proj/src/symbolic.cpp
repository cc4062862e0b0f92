#include "tempo/symbolic.hpp"

#include <utility>

namespace tempo {

namespace {

// A successor under construction: the accumulated constraint plus the clock
// assignment built so far.
struct Branch {
    Constraint c;
    std::map<std::string, LinExpr> clocks;
};

// Refine every branch by one activity/enabledness guard. `on_true` edits a
// branch on which the guard holds (its atoms already conjoined), `on_false`
// one on which it fails. Guards over ground marking entries fold to a
// constant, so the common case takes a single action and never splits; truly
// symbolic guards partition each branch into "all atoms hold" plus one branch
// per first failing atom. Unsatisfiable branches are dropped.
template <typename FT, typename FF>
std::vector<Branch> split_on(std::vector<Branch> branches, const Constraint& guard,
                             FT&& on_true, FF&& on_false) {
    std::vector<Branch> out;
    out.reserve(branches.size());
    for (Branch& br : branches) {
        if (guard.is_false_literal()) {
            on_false(br);
            if (is_sat(br.c)) out.push_back(std::move(br));
            continue;
        }
        if (guard.is_true()) {
            on_true(br);
            if (is_sat(br.c)) out.push_back(std::move(br));
            continue;
        }
        Branch pos = br;
        pos.c = pos.c.conjoin(guard);
        on_true(pos);
        if (is_sat(pos.c)) out.push_back(std::move(pos));

        Constraint prefix;  // atoms already assumed to hold
        for (const Atom& g : guard.atoms) {
            for (const Atom& na : g.negation()) {
                Branch neg = br;
                neg.c = neg.c.conjoin(prefix).conjoin(na);
                on_false(neg);
                if (is_sat(neg.c)) out.push_back(std::move(neg));
            }
            prefix.add(g);
        }
    }
    return out;
}

}  // namespace

std::string show(const SymState& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& [place, expr] : s.marking.entries) {
        if (!first) out += " ";
        first = false;
        out += place + ":" + show(expr);
    }
    out += "}";
    for (const auto& [label, expr] : s.clocks) out += " " + label + "=" + show(expr);
    if (s.global_time) out += " time=" + show(*s.global_time);
    if (s.tick_flag == TickFlag::TickNotOk) out += " [after-tick]";
    if (!s.constraint.is_true()) out += " when " + show(s.constraint);
    return out;
}

SymState sym_initial(const NetSpec& net, const TheoryVariant& variant) {
    SymState s;
    s.constraint = net.k0;
    if (!is_sat(s.constraint))
        throw SemanticsError("net " + net.name +
                             " has unsatisfiable parameter constraints");
    s.marking = net.initial_marking;
    for (const Transition& t : net.transitions) s.clocks[t.label] = LinExpr(0);
    if (variant.kind == TheoryVariant::Kind::R2S) s.global_time = LinExpr(0);
    return s;
}

std::vector<SymState> sym_tick(const NetSpec& net, const SymState& s,
                               const TheoryVariant& variant) {
    if (s.tick_flag == TickFlag::TickNotOk)
        throw SemanticsError("time cannot pass twice in a row under tick alternation");
    const LinExpr T = LinExpr::var(delta_var(s.fresh_counter));

    Branch start;
    start.c = s.constraint.conjoin(make_atom(LinExpr(0), Rel::LE, T));
    start.clocks = s.clocks;
    std::optional<LinExpr> gt = s.global_time;
    if (gt) {
        *gt += T;
        if (variant.kind == TheoryVariant::Kind::R2S && variant.time_bound)
            start.c = start.c.conjoin(
                make_atom(*gt, Rel::LE, LinExpr(Rat(*variant.time_bound))));
    }

    // Active transitions advance by T and must respect their deadlines (the
    // maximal-time-elapse condition); inactive ones hold still.
    std::vector<Branch> branches{std::move(start)};
    for (const Transition& t : net.transitions) {
        branches = split_on(
            std::move(branches), sym_active(s.marking, t),
            [&](Branch& b) {
                LinExpr advanced = b.clocks.at(t.label) + T;
                if (t.interval.upper)
                    b.c = b.c.conjoin(make_atom(advanced, Rel::LE, *t.interval.upper));
                b.clocks[t.label] = std::move(advanced);
            },
            [](Branch&) {});
    }

    std::vector<SymState> out;
    out.reserve(branches.size());
    for (Branch& b : branches) {
        SymState n;
        n.constraint = std::move(b.c);
        n.tick_flag = TickFlag::TickNotOk;
        n.marking = s.marking;
        n.clocks = std::move(b.clocks);
        n.global_time = gt;
        n.fresh_counter = s.fresh_counter + 1;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<SymState> sym_fire(const NetSpec& net, const SymState& s,
                               const std::string& label, const TheoryVariant& variant) {
    const Transition* t = net.find(label);
    if (!t) throw SemanticsError("unknown transition " + label);
    if (variant.kind == TheoryVariant::Kind::R3S && s.tick_flag != TickFlag::TickNotOk)
        return {};  // strict alternation: every fire must follow a tick

    Constraint c = s.constraint.conjoin(sym_active(s.marking, *t));
    const LinExpr& clock = s.clocks.at(label);
    c = c.conjoin(make_atom(t->interval.lower, Rel::LE, clock));
    if (t->interval.upper) c = c.conjoin(make_atom(clock, Rel::LE, *t->interval.upper));
    if (!is_sat(c)) return {};

    const SymBag interm = sym_bag_sub(s.marking, t->pre);
    const SymBag next_marking = sym_bag_add(interm, t->post);

    // The fired clock resets; every other clock persists exactly when its
    // transition stays enabled in the intermediate marking.
    std::vector<Branch> branches{Branch{std::move(c), {}}};
    for (const Transition& u : net.transitions) {
        if (u.label == label) {
            for (Branch& b : branches) b.clocks[u.label] = LinExpr(0);
            continue;
        }
        const LinExpr& kept = s.clocks.at(u.label);
        branches = split_on(
            std::move(branches), sym_enabled(interm, u),
            [&](Branch& b) { b.clocks[u.label] = kept; },
            [&](Branch& b) { b.clocks[u.label] = LinExpr(0); });
    }

    std::vector<SymState> out;
    out.reserve(branches.size());
    for (Branch& b : branches) {
        SymState n;
        n.constraint = std::move(b.c);
        n.tick_flag = TickFlag::TickOk;
        n.marking = next_marking;
        n.clocks = std::move(b.clocks);
        n.global_time = s.global_time;
        n.fresh_counter = s.fresh_counter;
        out.push_back(std::move(n));
    }
    return out;
}

std::vector<SymEdge> sym_successors(const NetSpec& net, const SymState& s,
                                    const TheoryVariant& variant) {
    std::vector<SymEdge> out;
    if (s.tick_flag == TickFlag::TickOk) {
        std::string lbl = "tick(" + show(delta_var(s.fresh_counter)) + ")";
        for (SymState& n : sym_tick(net, s, variant))
            out.push_back({lbl, std::move(n)});
    }
    for (const Transition& t : net.transitions)
        for (SymState& n : sym_fire(net, s, t.label, variant))
            out.push_back({t.label, std::move(n)});
    return out;
}

// ---------------------------------------------------------------------------
// Proposition encoding

namespace {

Atom cmp_atom(LinExpr lhs, CmpRel rel, LinExpr rhs) {
    switch (rel) {
        case CmpRel::LT: return make_atom(std::move(lhs), Rel::LT, std::move(rhs));
        case CmpRel::LE: return make_atom(std::move(lhs), Rel::LE, std::move(rhs));
        case CmpRel::EQ: return make_atom(std::move(lhs), Rel::EQ, std::move(rhs));
        case CmpRel::GE: return make_atom(std::move(rhs), Rel::LE, std::move(lhs));
        case CmpRel::GT: return make_atom(std::move(rhs), Rel::LT, std::move(lhs));
    }
    throw std::logic_error("cmp_atom: bad relation");
}

Formula atom_formula(Atom a) {
    Constraint c;
    c.add(std::move(a));
    return Formula::of(std::move(c));
}

const LinExpr& clock_expr(const SymState& s, const std::string& trans) {
    auto it = s.clocks.find(trans);
    if (it == s.clocks.end())
        throw SemanticsError("unknown transition in proposition: " + trans);
    return it->second;
}

const LinExpr& time_expr(const SymState& s) {
    if (!s.global_time)
        throw SemanticsError(
            "in-time needs a time-tracking symbolic state (R2S variant)");
    return *s.global_time;
}

// p is in negation normal form: Not survives only on the non-comparison atoms.
Formula encode_nnf(const Prop& p, const SymState& s, const NetSpec& net) {
    using K = Prop::Kind;
    switch (p.kind) {
        case K::True: return Formula::truth();
        case K::False: return Formula::falsity();
        case K::PlaceCmp:
            if (!net.has_place(p.a))
                throw SemanticsError("unknown place in proposition: " + p.a);
            return atom_formula(cmp_atom(s.marking.at(p.a), p.rel, p.expr));
        case K::ClockCmp:
            return atom_formula(cmp_atom(clock_expr(s, p.a), p.rel, p.expr));
        case K::Reach:
            return Formula::of(sym_bag_leq(p.marking, s.marking));
        case K::KBounded: {
            Constraint c;
            for (const std::string& pl : net.places)
                c.add(make_atom(s.marking.at(pl), Rel::LE, p.expr));
            return Formula::of(std::move(c));
        }
        case K::DiffGt: {
            const LinExpr& c1 = clock_expr(s, p.a);
            const LinExpr& c2 = clock_expr(s, p.b);
            Formula f = atom_formula(make_atom(p.expr, Rel::LT, c1 - c2));
            return disjoin(std::move(f),
                           atom_formula(make_atom(p.expr, Rel::LT, c2 - c1)));
        }
        case K::InTime: {
            const LinExpr& gt = time_expr(s);
            Constraint c;
            c.add(make_atom(p.window.lower, Rel::LE, gt));
            if (p.window.upper) c.add(make_atom(gt, Rel::LE, *p.window.upper));
            return Formula::of(std::move(c));
        }
        case K::And: {
            Formula f = Formula::truth();
            for (const Prop& k : p.kids) f = conjoin(f, encode_nnf(k, s, net));
            return f;
        }
        case K::Or: {
            Formula f = Formula::falsity();
            for (const Prop& k : p.kids)
                f = disjoin(std::move(f), encode_nnf(k, s, net));
            return f;
        }
        case K::Not: {
            const Prop& q = p.kids.front();
            switch (q.kind) {
                case K::Reach: {  // some place holds fewer tokens than asked
                    Formula f = Formula::falsity();
                    for (const auto& [pl, n] : q.marking.entries)
                        f = disjoin(std::move(f),
                                    atom_formula(make_atom(
                                        s.marking.at(pl), Rel::LT, LinExpr(n))));
                    return f;
                }
                case K::KBounded: {  // some place exceeds the bound
                    Formula f = Formula::falsity();
                    for (const std::string& pl : net.places)
                        f = disjoin(std::move(f),
                                    atom_formula(make_atom(q.expr, Rel::LT,
                                                           s.marking.at(pl))));
                    return f;
                }
                case K::DiffGt: {  // |c1 - c2| <= r
                    const LinExpr& c1 = clock_expr(s, q.a);
                    const LinExpr& c2 = clock_expr(s, q.b);
                    Constraint c;
                    c.add(make_atom(c1 - c2, Rel::LE, q.expr));
                    c.add(make_atom(c2 - c1, Rel::LE, q.expr));
                    return Formula::of(std::move(c));
                }
                case K::InTime: {  // before the window or past it
                    const LinExpr& gt = time_expr(s);
                    Formula f =
                        atom_formula(make_atom(gt, Rel::LT, q.window.lower));
                    if (q.window.upper)
                        f = disjoin(std::move(f),
                                    atom_formula(make_atom(*q.window.upper,
                                                           Rel::LT, gt)));
                    return f;
                }
                default:
                    throw std::logic_error(
                        "encode: non-atomic negation survived nnf");
            }
        }
    }
    throw std::logic_error("encode: bad proposition kind");
}

}  // namespace

Formula encode(const Prop& p, const SymState& s, const NetSpec& net) {
    return encode_nnf(nnf(p), s, net);
}

bool holds_sym(const Prop& p, const SymState& s, const NetSpec& net) {
    return is_sat(conjoin(Formula::of(s.constraint), encode(p, s, net)));
}

}  // namespace tempo
