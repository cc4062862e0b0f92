#include "doctest.h"

#include "tempo/prop.hpp"
#include "util.hpp"

#include <set>

using namespace tempo;

namespace {

NetSpec producer() { return load_net(std::string(TEMPO_NETS_DIR) + "/producer.tpn"); }
NetSpec tutorial() { return load_net(std::string(TEMPO_NETS_DIR) + "/tutorial.tpn"); }
NetSpec inhibit() { return load_net(std::string(TEMPO_NETS_DIR) + "/inhibit.tpn"); }

// A pool of parseable propositions for round-trip and nnf property tests.
std::vector<std::string> prop_pool() {
    return {
        "true",
        "false",
        "p2 >= 2",
        "p1 < 1",
        "p3 = 0",
        "p5 <= a",
        "p4 > 2*a - 1",
        "clock(t1) <= a",
        "clock(t3) > 0",
        "k-bounded(1)",
        "k-bounded(a + 1)",
        "reach(p2=2 p4=1)",
        "diff>(t1, t3, 10)",
        "in-time [0, a]",
        "in-time [2, inf]",
        "p2 >= 2 and not k-bounded(1)",
        "not (p1 >= 1 and p2 >= 1)",
        "p1 >= 1 or p2 >= 1 or p3 >= 1",
        "p1 >= 1 and p2 >= 1 or p3 >= 1",
        "p1 >= 1 and (p2 >= 1 or p3 >= 1)",
        "not not p2 = 2",
        "not in-time [0, 5] and clock(t2) < 4",
    };
}

Prop rand_prop(std::mt19937_64& g, const NetSpec& net, int depth) {
    auto leaf = [&]() -> Prop {
        switch (testutil::uniform(g, 0, 5)) {
            case 0: return Prop::truth();
            case 1: return Prop::falsity();
            case 2: {
                const auto& place = net.places[testutil::uniform(g, 0, (int)net.places.size() - 1)];
                auto rel = static_cast<CmpRel>(testutil::uniform(g, 0, 4));
                return Prop::place_cmp(place, rel, LinExpr(testutil::uniform(g, 0, 3)));
            }
            case 3: {
                const auto& t = net.transitions[testutil::uniform(g, 0, (int)net.transitions.size() - 1)];
                auto rel = static_cast<CmpRel>(testutil::uniform(g, 0, 4));
                return Prop::clock_cmp(t.label, rel, LinExpr(testutil::uniform(g, 0, 6)));
            }
            case 4: return Prop::k_bounded(LinExpr(testutil::uniform(g, 0, 2)));
            default: {
                Bag m;
                m.set(net.places[testutil::uniform(g, 0, (int)net.places.size() - 1)],
                      testutil::uniform(g, 1, 2));
                return Prop::reach(m);
            }
        }
    };
    if (depth == 0) return leaf();
    switch (testutil::uniform(g, 0, 3)) {
        case 0: return leaf();
        case 1: return Prop::negate(rand_prop(g, net, depth - 1));
        case 2:
            return Prop::conj({rand_prop(g, net, depth - 1), rand_prop(g, net, depth - 1)});
        default:
            return Prop::disj({rand_prop(g, net, depth - 1), rand_prop(g, net, depth - 1)});
    }
}

// Ground truth for a prop on a concrete valuation, used to validate nnf.
struct GroundState {
    std::map<std::string, long long> marking;
    std::map<std::string, Rat> clocks;
};

bool eval_ground(const Prop& p, const GroundState& s) {
    using K = Prop::Kind;
    switch (p.kind) {
        case K::True: return true;
        case K::False: return false;
        case K::PlaceCmp: return cmp_holds(Rat(s.marking.at(p.a)), p.rel, p.expr.eval({}));
        case K::ClockCmp: return cmp_holds(s.clocks.at(p.a), p.rel, p.expr.eval({}));
        case K::Reach: {
            for (const auto& [place, n] : p.marking.entries)
                if (s.marking.at(place) < n) return false;
            return true;
        }
        case K::KBounded: {
            for (const auto& [place, n] : s.marking)
                if (Rat(n) > p.expr.eval({})) return false;
            return true;
        }
        case K::Not: return !eval_ground(p.kids.front(), s);
        case K::And:
            for (const auto& k : p.kids)
                if (!eval_ground(k, s)) return false;
            return true;
        case K::Or:
            for (const auto& k : p.kids)
                if (eval_ground(k, s)) return true;
            return false;
        default: FAIL("unexpected atom kind in ground eval"); return false;
    }
}

}  // namespace

TEST_CASE("comparison relations evaluate and print") {
    CHECK(cmp_holds(Rat(1), CmpRel::LT, Rat(2)));
    CHECK_FALSE(cmp_holds(Rat(2), CmpRel::LT, Rat(2)));
    CHECK(cmp_holds(Rat(2), CmpRel::LE, Rat(2)));
    CHECK(cmp_holds(Rat(2), CmpRel::EQ, Rat(2)));
    CHECK_FALSE(cmp_holds(Rat(2), CmpRel::EQ, Rat(3)));
    CHECK(cmp_holds(Rat(3), CmpRel::GE, Rat(3)));
    CHECK(cmp_holds(Rat(4), CmpRel::GT, Rat(3)));
    CHECK(show(CmpRel::LE) == "<=");
    CHECK(show(CmpRel::EQ) == "=");
}

TEST_CASE("conjunction with negated boundedness parses to the expected tree") {
    NetSpec net = producer();
    Prop p = parse_prop("p2 >= 2 and not k-bounded(1)", net);
    REQUIRE(p.kind == Prop::Kind::And);
    REQUIRE(p.kids.size() == 2);
    CHECK(p.kids[0] == Prop::place_cmp("p2", CmpRel::GE, LinExpr(2)));
    REQUIRE(p.kids[1].kind == Prop::Kind::Not);
    CHECK(p.kids[1].kids.front() == Prop::k_bounded(LinExpr(2 - 1)));
    CHECK(show(p) == "p2 >= 2 and not k-bounded(1)");
}

TEST_CASE("atom forms parse against the net's declarations") {
    NetSpec net = producer();

    Prop pc = parse_prop("p5 <= a", net);
    REQUIRE(pc.kind == Prop::Kind::PlaceCmp);
    CHECK(pc.a == "p5");
    CHECK(pc.expr == LinExpr::var(time_param("a")));

    Prop cc = parse_prop("clock(t1) <= a", net);
    REQUIRE(cc.kind == Prop::Kind::ClockCmp);
    CHECK(cc.a == "t1");
    CHECK(cc.rel == CmpRel::LE);

    Prop r = parse_prop("reach(p2=2 p4=1)", net);
    REQUIRE(r.kind == Prop::Kind::Reach);
    Bag want;
    want.set("p2", 2);
    want.set("p4", 1);
    CHECK(r.marking == want);

    Prop d = parse_prop("diff>(t1, t3, 10)", net);
    REQUIRE(d.kind == Prop::Kind::DiffGt);
    CHECK(d.a == "t1");
    CHECK(d.b == "t3");
    CHECK(d.expr == LinExpr(10));

    Prop it = parse_prop("in-time [0, a]", net);
    REQUIRE(it.kind == Prop::Kind::InTime);
    CHECK(it.window.lower == LinExpr(0));
    REQUIRE(it.window.upper.has_value());
    CHECK(*it.window.upper == LinExpr::var(time_param("a")));

    Prop unbounded = parse_prop("in-time [2, inf]", net);
    CHECK_FALSE(unbounded.window.upper.has_value());
}

TEST_CASE("parse errors carry position and cause") {
    NetSpec net = producer();
    CHECK_THROWS_WITH_AS(parse_prop("p9 >= 1", net),
                         doctest::Contains("undeclared place p9"), PropError);
    CHECK_THROWS_WITH_AS(parse_prop("clock(t9) > 0", net),
                         doctest::Contains("undeclared transition t9"), PropError);
    CHECK_THROWS_WITH_AS(parse_prop("diff>(t1, t9, 1)", net),
                         doctest::Contains("undeclared transition t9"), PropError);
    CHECK_THROWS_WITH_AS(parse_prop("reach(p9=1)", net),
                         doctest::Contains("undeclared place p9"), PropError);
    CHECK_THROWS_AS(parse_prop("p2 >=", net), PropError);
    CHECK_THROWS_AS(parse_prop("p2", net), PropError);
    CHECK_THROWS_AS(parse_prop("(p2 >= 1", net), PropError);
    CHECK_THROWS_AS(parse_prop("p2 >= 1 p3", net), PropError);
    CHECK_THROWS_AS(parse_prop("k-bounded(b)", net), PropError);  // undeclared param
    CHECK_THROWS_AS(parse_prop("", net), PropError);
}

TEST_CASE("prop parse/print round-trips") {
    NetSpec net = producer();
    for (const std::string& text : prop_pool()) {
        CAPTURE(text);
        Prop p = parse_prop(text, net);
        std::string printed = show(p);
        Prop again = parse_prop(printed, net);
        CHECK(again == p);
        CHECK(show(again) == printed);
    }
}

TEST_CASE("printing generated props parses back to the same tree") {
    NetSpec net = tutorial();
    auto g = testutil::rng(20260816);
    for (int i = 0; i < 200; ++i) {
        Prop p = rand_prop(g, net, 3);
        std::string printed = show(p);
        CAPTURE(printed);
        Prop again = parse_prop(printed, net);
        CHECK(again == p);
    }
}

TEST_CASE("negation normal form preserves ground truth and removes inner nots") {
    NetSpec net = producer();
    auto g = testutil::rng(99);

    auto check_no_bad_not = [](const Prop& p) {
        // after nnf, Not may wrap only the atoms that cannot absorb it
        std::vector<const Prop*> work{&p};
        while (!work.empty()) {
            const Prop* q = work.back();
            work.pop_back();
            if (q->kind == Prop::Kind::Not) {
                auto k = q->kids.front().kind;
                bool allowed = k == Prop::Kind::Reach || k == Prop::Kind::KBounded ||
                               k == Prop::Kind::DiffGt || k == Prop::Kind::InTime;
                CHECK(allowed);
            }
            for (const Prop& kid : q->kids) work.push_back(&kid);
        }
    };

    for (int i = 0; i < 200; ++i) {
        Prop p = rand_prop(g, net, 3);
        Prop n = nnf(p);
        check_no_bad_not(n);

        GroundState s;
        for (const auto& place : net.places) s.marking[place] = testutil::uniform(g, 0, 3);
        for (const auto& t : net.transitions)
            s.clocks[t.label] = Rat(testutil::uniform(g, 0, 6));
        CAPTURE(show(p));
        CHECK(eval_ground(p, s) == eval_ground(n, s));
        CHECK(nnf(n) == n);  // idempotent
    }
}

TEST_CASE("negating a comparison flips its relation in nnf") {
    NetSpec net = producer();
    Prop p = nnf(parse_prop("not p2 < 2", net));
    CHECK(p == Prop::place_cmp("p2", CmpRel::GE, LinExpr(2)));
    Prop q = nnf(parse_prop("not p2 = 2", net));
    REQUIRE(q.kind == Prop::Kind::Or);
    CHECK(q.kids[0] == Prop::place_cmp("p2", CmpRel::LT, LinExpr(2)));
    CHECK(q.kids[1] == Prop::place_cmp("p2", CmpRel::GT, LinExpr(2)));
    Prop r = nnf(parse_prop("not (p1 >= 1 and p2 >= 1)", net));
    REQUIRE(r.kind == Prop::Kind::Or);
    CHECK(r.kids[0] == Prop::place_cmp("p1", CmpRel::LT, LinExpr(1)));
}

TEST_CASE("mentions_time finds in-time atoms at any depth") {
    NetSpec net = producer();
    CHECK(mentions_time(parse_prop("in-time [0, 5]", net)));
    CHECK(mentions_time(parse_prop("p2 >= 1 and (p3 >= 1 or not in-time [0, a])", net)));
    CHECK_FALSE(mentions_time(parse_prop("p2 >= 1 and not k-bounded(1)", net)));
}

TEST_CASE("eventually form parses") {
    NetSpec net = tutorial();
    TemporalFormula f = parse_temporal("<> (start >= 2)", net);
    CHECK(f.kind == TemporalFormula::Kind::Eventually);
    CHECK(f.p == Prop::place_cmp("start", CmpRel::GE, LinExpr(2)));
    CHECK_FALSE(f.window.has_value());
    CHECK(show(f) == "<> start >= 2");
}

TEST_CASE("timed until parses with its window") {
    NetSpec net = tutorial();
    TemporalFormula f = parse_temporal("(k-bounded(1)) U [0,30] (start >= 2)", net);
    CHECK(f.kind == TemporalFormula::Kind::TimedUntil);
    CHECK(f.p == Prop::k_bounded(LinExpr(1)));
    CHECK(f.q == Prop::place_cmp("start", CmpRel::GE, LinExpr(2)));
    REQUIRE(f.window.has_value());
    CHECK(f.window->lower == LinExpr(0));
    CHECK(*f.window->upper == LinExpr(30));
    CHECK(show(f) == "k-bounded(1) U [0, 30] start >= 2");
}

TEST_CASE("all six temporal forms round-trip") {
    NetSpec net = tutorial();
    for (const std::string& text : {
             "<> start >= 2",
             "[] k-bounded(1)",
             "k-bounded(2) U start >= 2",
             "<[0, 20]> start >= 2",
             "[[a, b]] fatherCont <= 2",
             "k-bounded(1) U [0, 30] start >= 2",
         }) {
        CAPTURE(text);
        TemporalFormula f = parse_temporal(text, net);
        CHECK(parse_temporal(show(f), net) == f);
    }
    CHECK(parse_temporal("<[5, inf]> start >= 2", net).window->upper == std::nullopt);
    CHECK_THROWS_AS(parse_temporal("start >= 2", net), PropError);   // missing U
    CHECK_THROWS_AS(parse_temporal("<> p U <> q", net), PropError);  // no nesting
}

TEST_CASE("model-checking queries parse quantifier, formula and time cap") {
    NetSpec net = tutorial();

    MCQuery q1 = parse_mc_query("A [] k-bounded(1)", net);
    CHECK(q1.quant == PathQuant::ForAll);
    CHECK(q1.formula.kind == TemporalFormula::Kind::Always);
    CHECK_FALSE(q1.in_time.has_value());

    MCQuery q2 = parse_mc_query("E <> (start >= 2) in-time 30", net);
    CHECK(q2.quant == PathQuant::Exists);
    CHECK(q2.formula.kind == TemporalFormula::Kind::Eventually);
    REQUIRE(q2.in_time.has_value());
    CHECK(*q2.in_time == Rat(30));

    MCQuery q3 = parse_mc_query("E <> start >= 2 in-time 61/2", net);
    CHECK(*q3.in_time == Rat(61) / 2);

    for (const std::string& text : {
             "A [] k-bounded(1)",
             "E <> start >= 2 in-time 30",
             "A <[0, 20]> start >= 2",
             "E k-bounded(1) U [0, 30] start >= 2 in-time 50",
         }) {
        CAPTURE(text);
        MCQuery q = parse_mc_query(text, net);
        CHECK(parse_mc_query(show(q), net) == q);
    }

    CHECK_THROWS_AS(parse_mc_query("[] k-bounded(1)", net), PropError);
    CHECK_THROWS_AS(parse_mc_query("A [] k-bounded(1) in-time", net), PropError);
    CHECK_THROWS_AS(parse_mc_query("A [] k-bounded(1) extra", net), PropError);
}

TEST_CASE("LTL parses with the documented precedence") {
    NetSpec net = producer();

    Ltl f = parse_ltl("([] <> p3 = 0) /\\ ([] <> p3 = 1)", net);
    REQUIRE(f.kind == Ltl::Kind::And);
    REQUIRE(f.kids[0].kind == Ltl::Kind::Always);
    REQUIRE(f.kids[0].kids[0].kind == Ltl::Kind::Eventually);
    CHECK(f.kids[0].kids[0].kids[0] ==
          Ltl::of(Prop::place_cmp("p3", CmpRel::EQ, LinExpr(0))));

    Ltl g = parse_ltl("<> (p2 = 2)", net);
    REQUIRE(g.kind == Ltl::Kind::Eventually);

    // implication is right-associative and binds loosest
    Ltl h = parse_ltl("p1 >= 1 -> p2 >= 1 -> p3 >= 1", net);
    REQUIRE(h.kind == Ltl::Kind::Imp);
    CHECK(h.kids[1].kind == Ltl::Kind::Imp);

    // until is right-associative and binds tighter than conjunction
    Ltl u = parse_ltl("p1 >= 1 U p2 >= 1 U p3 >= 1 /\\ p4 >= 1", net);
    REQUIRE(u.kind == Ltl::Kind::And);
    REQUIRE(u.kids[0].kind == Ltl::Kind::Until);
    CHECK(u.kids[0].kids[1].kind == Ltl::Kind::Until);

    Ltl x = parse_ltl("X ~ p1 >= 1", net);
    REQUIRE(x.kind == Ltl::Kind::Next);
    CHECK(x.kids[0].kind == Ltl::Kind::Not);

    CHECK(parse_ltl("[] true", net) == Ltl::un(Ltl::Kind::Always, Ltl::of(Prop::truth())));
    CHECK_THROWS_AS(parse_ltl("p1 >= 1 U", net), PropError);
    CHECK_THROWS_AS(parse_ltl("(p1 >= 1", net), PropError);
}

TEST_CASE("LTL parse/print round-trips") {
    NetSpec net = producer();
    for (const std::string& text : {
             "([] <> p3 = 0) /\\ ([] <> p3 = 1)",
             "<> (p2 = 2)",
             "[] true",
             "p1 >= 1 -> <> p2 >= 1",
             "~ (p1 >= 1 \\/ p2 >= 1) U k-bounded(2)",
             "X X p4 = 1",
             "[] (p2 >= 1 -> <> p3 >= 1)",
             "p1 >= 1 R p3 = 0",
             "p1 = 0 R p2 = 0 R p3 = 0",
         }) {
        CAPTURE(text);
        Ltl f = parse_ltl(text, net);
        std::string printed = show(f);
        CAPTURE(printed);
        Ltl again = parse_ltl(printed, net);
        CHECK(again == f);
        CHECK(show(again) == printed);
    }
}

TEST_CASE("word connectives are accepted in LTL alongside symbols") {
    NetSpec net = producer();
    CHECK(parse_ltl("p1 >= 1 and p2 >= 1", net) == parse_ltl("p1 >= 1 /\\ p2 >= 1", net));
    CHECK(parse_ltl("p1 >= 1 or p2 >= 1", net) == parse_ltl("p1 >= 1 \\/ p2 >= 1", net));
    CHECK(parse_ltl("not p1 >= 1", net) == parse_ltl("~ p1 >= 1", net));
}

TEST_CASE("first-fire constraints parse on the inhibitor net") {
    NetSpec net = inhibit();
    Prop p = parse_prop("clock(t2) >= l2 and in-time [0, u1 + u3]", net);
    REQUIRE(p.kind == Prop::Kind::And);
    CHECK(p.kids[0].expr == LinExpr::var(time_param("l2")));
    REQUIRE(p.kids[1].window.upper.has_value());
    LinExpr want = LinExpr::var(time_param("u1"));
    want += LinExpr::var(time_param("u3"));
    CHECK(*p.kids[1].window.upper == want);
}
