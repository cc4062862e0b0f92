#include "tempo/prop.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>

namespace tempo {

bool cmp_holds(const Rat& lhs, CmpRel rel, const Rat& rhs) {
    switch (rel) {
        case CmpRel::LT: return lhs < rhs;
        case CmpRel::LE: return lhs <= rhs;
        case CmpRel::EQ: return lhs == rhs;
        case CmpRel::GE: return lhs >= rhs;
        case CmpRel::GT: return lhs > rhs;
    }
    return false;
}

std::string show(CmpRel rel) {
    switch (rel) {
        case CmpRel::LT: return "<";
        case CmpRel::LE: return "<=";
        case CmpRel::EQ: return "=";
        case CmpRel::GE: return ">=";
        case CmpRel::GT: return ">";
    }
    return "?";
}

// ---- constructors -----------------------------------------------------------

Prop Prop::falsity() {
    Prop p;
    p.kind = Kind::False;
    return p;
}

Prop Prop::place_cmp(std::string place, CmpRel rel, LinExpr e) {
    Prop p;
    p.kind = Kind::PlaceCmp;
    p.a = std::move(place);
    p.rel = rel;
    p.expr = std::move(e);
    return p;
}

Prop Prop::clock_cmp(std::string trans, CmpRel rel, LinExpr e) {
    Prop p;
    p.kind = Kind::ClockCmp;
    p.a = std::move(trans);
    p.rel = rel;
    p.expr = std::move(e);
    return p;
}

Prop Prop::reach(Bag m) {
    Prop p;
    p.kind = Kind::Reach;
    p.marking = std::move(m);
    return p;
}

Prop Prop::k_bounded(LinExpr e) {
    Prop p;
    p.kind = Kind::KBounded;
    p.expr = std::move(e);
    return p;
}

Prop Prop::diff_gt(std::string t1, std::string t2, LinExpr e) {
    Prop p;
    p.kind = Kind::DiffGt;
    p.a = std::move(t1);
    p.b = std::move(t2);
    p.expr = std::move(e);
    return p;
}

Prop Prop::in_time(ParamInterval w) {
    Prop p;
    p.kind = Kind::InTime;
    p.window = std::move(w);
    return p;
}

Prop Prop::conj(std::vector<Prop> kids) {
    if (kids.size() == 1) return std::move(kids.front());
    Prop p;
    p.kind = Kind::And;
    p.kids = std::move(kids);
    return p;
}

Prop Prop::disj(std::vector<Prop> kids) {
    if (kids.size() == 1) return std::move(kids.front());
    Prop p;
    p.kind = Kind::Or;
    p.kids = std::move(kids);
    return p;
}

Prop Prop::negate(Prop p) {
    if (p.kind == Kind::Not) return std::move(p.kids.front());
    if (p.kind == Kind::True) return falsity();
    if (p.kind == Kind::False) return truth();
    Prop n;
    n.kind = Kind::Not;
    n.kids.push_back(std::move(p));
    return n;
}

// ---- negation normal form ---------------------------------------------------

namespace {

CmpRel flip(CmpRel rel) {
    switch (rel) {
        case CmpRel::LT: return CmpRel::GE;
        case CmpRel::LE: return CmpRel::GT;
        case CmpRel::GE: return CmpRel::LT;
        case CmpRel::GT: return CmpRel::LE;
        case CmpRel::EQ: return CmpRel::EQ;  // handled separately
    }
    return rel;
}

Prop nnf_at(const Prop& p, bool positive) {
    using K = Prop::Kind;
    switch (p.kind) {
        case K::Not: return nnf_at(p.kids.front(), !positive);
        case K::And:
        case K::Or: {
            std::vector<Prop> kids;
            kids.reserve(p.kids.size());
            for (const Prop& k : p.kids) kids.push_back(nnf_at(k, positive));
            bool conjunctive = (p.kind == K::And) == positive;
            return conjunctive ? Prop::conj(std::move(kids)) : Prop::disj(std::move(kids));
        }
        case K::True: return positive ? Prop::truth() : Prop::falsity();
        case K::False: return positive ? Prop::falsity() : Prop::truth();
        case K::PlaceCmp:
        case K::ClockCmp: {
            if (positive) return p;
            if (p.rel == CmpRel::EQ) {
                Prop lt = p, gt = p;
                lt.rel = CmpRel::LT;
                gt.rel = CmpRel::GT;
                return Prop::disj({std::move(lt), std::move(gt)});
            }
            Prop q = p;
            q.rel = flip(p.rel);
            return q;
        }
        default:  // Reach / KBounded / DiffGt / InTime keep a Not wrapper
            return positive ? p : Prop::negate(p);
    }
}

}  // namespace

Prop nnf(const Prop& p) { return nnf_at(p, true); }

bool mentions_time(const Prop& p) {
    if (p.kind == Prop::Kind::InTime) return true;
    return std::any_of(p.kids.begin(), p.kids.end(),
                       [](const Prop& k) { return mentions_time(k); });
}

// ---- tokenizer shared by the prop/temporal/LTL grammars ----------------------

namespace {

struct Tok {
    enum Type : std::uint8_t { Word, Num, Sym, End };
    Type type = End;
    std::string text;
    size_t pos = 0;
    size_t end = 0;
};

struct PLexer {
    std::string src;
    std::vector<Tok> toks;
    size_t cur = 0;

    explicit PLexer(std::string text) : src(std::move(text)) {
        size_t i = 0;
        auto is_word_start = [](char c) {
            return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
        };
        auto is_word_char = [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        };
        while (i < src.size()) {
            char c = src[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            Tok t;
            t.pos = i;
            if (is_word_start(c)) {
                size_t j = i + 1;
                while (j < src.size() && is_word_char(src[j])) ++j;
                // hyphenated keywords: k-bounded, in-time
                while (j + 1 < src.size() && src[j] == '-' && is_word_start(src[j + 1])) {
                    j += 2;
                    while (j < src.size() && is_word_char(src[j])) ++j;
                }
                t.type = Tok::Word;
                t.text = src.substr(i, j - i);
                i = j;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t j = i + 1;
                while (j < src.size() &&
                       (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
                    ++j;
                t.type = Tok::Num;
                t.text = src.substr(i, j - i);
                i = j;
            } else {
                static const char* two[] = {"<=", ">=", "->", "/\\", "\\/"};
                t.type = Tok::Sym;
                t.text = src.substr(i, 1);
                for (const char* s : two) {
                    if (src.compare(i, 2, s) == 0) {
                        t.text = s;
                        break;
                    }
                }
                i += t.text.size();
            }
            t.end = i;
            toks.push_back(std::move(t));
        }
        Tok end;
        end.pos = end.end = src.size();
        toks.push_back(end);
    }

    const Tok& peek(size_t ahead = 0) const {
        size_t k = cur + ahead;
        return k < toks.size() ? toks[k] : toks.back();
    }
    Tok next() {
        Tok t = peek();
        if (cur + 1 < toks.size()) ++cur;
        return t;
    }
    bool at_end() const { return peek().type == Tok::End; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw PropError(msg + " at position " + std::to_string(peek().pos) + " in '" + src +
                        "'");
    }
    bool eat_sym(const std::string& s) {
        if (peek().type == Tok::Sym && peek().text == s) {
            next();
            return true;
        }
        return false;
    }
    bool eat_word(const std::string& w) {
        if (peek().type == Tok::Word && peek().text == w) {
            next();
            return true;
        }
        return false;
    }
    void expect_sym(const std::string& s) {
        if (!eat_sym(s)) fail("expected '" + s + "'");
    }
    std::string expect_word(const char* what) {
        if (peek().type != Tok::Word) fail(std::string("expected ") + what);
        return next().text;
    }
};

bool is_stopword(const std::string& w) {
    static const std::set<std::string> words = {"and",   "or",       "not",  "true", "false",
                                                "U",     "R",        "k-bounded", "reach",
                                                "clock", "diff",     "in-time",   "inf"};
    return words.count(w) > 0;
}

// Takes the longest token run that can belong to a linear expression and hands
// the original text span to the arithmetic parser.
LinExpr parse_expr_slice(PLexer& lx, const SymbolTable& table) {
    size_t start = lx.peek().pos, end = start;
    static const std::set<std::string> ops = {"+", "-", "*", "/"};
    while (true) {
        const Tok& t = lx.peek();
        if (t.type == Tok::Num || (t.type == Tok::Word && !is_stopword(t.text)) ||
            (t.type == Tok::Sym && ops.count(t.text))) {
            end = t.end;
            lx.next();
            continue;
        }
        break;
    }
    if (end == start) lx.fail("expected an expression");
    try {
        return parse_linexpr(std::string_view(lx.src).substr(start, end - start), &table);
    } catch (const ParseError& e) {
        throw PropError(std::string(e.what()) + " (in '" + lx.src + "')");
    }
}

ParamInterval parse_window(PLexer& lx, const SymbolTable& table) {
    ParamInterval w;
    lx.expect_sym("[");
    w.lower = parse_expr_slice(lx, table);
    if (!lx.eat_sym(",") && !lx.eat_sym(":")) lx.fail("expected ',' between interval bounds");
    if (!lx.eat_word("inf")) w.upper = parse_expr_slice(lx, table);
    lx.expect_sym("]");
    return w;
}

std::optional<CmpRel> rel_of(const std::string& s) {
    if (s == "<") return CmpRel::LT;
    if (s == "<=") return CmpRel::LE;
    if (s == "=") return CmpRel::EQ;
    if (s == ">=") return CmpRel::GE;
    if (s == ">") return CmpRel::GT;
    return std::nullopt;
}

CmpRel expect_rel(PLexer& lx) {
    if (lx.peek().type == Tok::Sym) {
        if (auto r = rel_of(lx.peek().text)) {
            lx.next();
            return *r;
        }
    }
    lx.fail("expected a comparison operator");
}

struct PropParser {
    PLexer& lx;
    const NetSpec& net;
    SymbolTable table;

    PropParser(PLexer& l, const NetSpec& n) : lx(l), net(n), table(n.symbols()) {}

    Prop parse() {
        std::vector<Prop> kids{parse_and()};
        while (lx.eat_word("or")) kids.push_back(parse_and());
        return Prop::disj(std::move(kids));
    }

    Prop parse_and() {
        std::vector<Prop> kids{parse_unary()};
        while (lx.eat_word("and")) kids.push_back(parse_unary());
        return Prop::conj(std::move(kids));
    }

    Prop parse_unary() {
        if (lx.eat_word("not")) return Prop::negate(parse_unary());
        return parse_primary();
    }

    Prop parse_primary() {
        if (lx.eat_sym("(")) {
            Prop p = parse();
            lx.expect_sym(")");
            return p;
        }
        if (lx.peek().type != Tok::Word) lx.fail("expected a proposition");
        std::string w = lx.next().text;
        if (w == "true") return Prop::truth();
        if (w == "false") return Prop::falsity();
        if (w == "k-bounded") {
            lx.expect_sym("(");
            LinExpr e = parse_expr_slice(lx, table);
            lx.expect_sym(")");
            return Prop::k_bounded(std::move(e));
        }
        if (w == "reach") {
            lx.expect_sym("(");
            Bag m;
            while (!lx.eat_sym(")")) {
                std::string place = lx.expect_word("a place name");
                if (!net.has_place(place)) lx.fail("undeclared place " + place);
                lx.expect_sym("=");
                if (lx.peek().type != Tok::Num) lx.fail("expected a token count");
                m.set(place, std::stoll(lx.next().text));
            }
            return Prop::reach(std::move(m));
        }
        if (w == "diff") {
            lx.expect_sym(">");
            lx.expect_sym("(");
            std::string t1 = lx.expect_word("a transition name");
            lx.expect_sym(",");
            std::string t2 = lx.expect_word("a transition name");
            lx.expect_sym(",");
            LinExpr e = parse_expr_slice(lx, table);
            lx.expect_sym(")");
            for (const auto& t : {t1, t2})
                if (!net.find(t)) lx.fail("undeclared transition " + t);
            return Prop::diff_gt(std::move(t1), std::move(t2), std::move(e));
        }
        if (w == "in-time") return Prop::in_time(parse_window(lx, table));
        if (w == "clock") {
            lx.expect_sym("(");
            std::string t = lx.expect_word("a transition name");
            if (!net.find(t)) lx.fail("undeclared transition " + t);
            lx.expect_sym(")");
            CmpRel rel = expect_rel(lx);
            return Prop::clock_cmp(std::move(t), rel, parse_expr_slice(lx, table));
        }
        if (!net.has_place(w)) lx.fail("undeclared place " + w);
        CmpRel rel = expect_rel(lx);
        return Prop::place_cmp(std::move(w), rel, parse_expr_slice(lx, table));
    }
};

}  // namespace

Prop parse_prop(const std::string& text, const NetSpec& net) {
    PLexer lx(text);
    PropParser p(lx, net);
    Prop out = p.parse();
    if (!lx.at_end()) lx.fail("unexpected trailing input");
    return out;
}

// ---- printing ----------------------------------------------------------------

namespace {

std::string show_window(const ParamInterval& w) {
    return "[" + show(w.lower) + ", " + (w.upper ? show(*w.upper) : std::string("inf")) + "]";
}

// precedence: or = 0, and = 1, not = 2, atoms = 3
int prop_prec(const Prop& p) {
    switch (p.kind) {
        case Prop::Kind::Or: return 0;
        case Prop::Kind::And: return 1;
        case Prop::Kind::Not: return 2;
        default: return 3;
    }
}

void show_prop(const Prop& p, int ctx, std::string& out) {
    int prec = prop_prec(p);
    bool parens = prec < ctx;
    if (parens) out += "(";
    switch (p.kind) {
        case Prop::Kind::True: out += "true"; break;
        case Prop::Kind::False: out += "false"; break;
        case Prop::Kind::PlaceCmp:
            out += p.a + " " + show(p.rel) + " " + show(p.expr);
            break;
        case Prop::Kind::ClockCmp:
            out += "clock(" + p.a + ") " + show(p.rel) + " " + show(p.expr);
            break;
        case Prop::Kind::Reach: {
            out += "reach(";
            bool first = true;
            for (const auto& [place, n] : p.marking.entries) {
                if (!first) out += " ";
                first = false;
                out += place + "=" + std::to_string(n);
            }
            out += ")";
            break;
        }
        case Prop::Kind::KBounded: out += "k-bounded(" + show(p.expr) + ")"; break;
        case Prop::Kind::DiffGt:
            out += "diff>(" + p.a + ", " + p.b + ", " + show(p.expr) + ")";
            break;
        case Prop::Kind::InTime: out += "in-time " + show_window(p.window); break;
        case Prop::Kind::Not:
            out += "not ";
            show_prop(p.kids.front(), 3, out);
            break;
        case Prop::Kind::And:
        case Prop::Kind::Or: {
            const char* sep = p.kind == Prop::Kind::And ? " and " : " or ";
            bool first = true;
            for (const Prop& k : p.kids) {
                if (!first) out += sep;
                first = false;
                show_prop(k, prec + 1, out);
            }
            break;
        }
    }
    if (parens) out += ")";
}

}  // namespace

std::string show(const Prop& p) {
    std::string out;
    show_prop(p, 0, out);
    return out;
}

// ---- temporal formulas ---------------------------------------------------------

namespace {

TemporalFormula parse_temporal_body(PLexer& lx, const NetSpec& net) {
    PropParser pp(lx, net);
    TemporalFormula f;
    if (lx.peek().type == Tok::Sym && lx.peek().text == "<") {
        lx.next();
        if (lx.eat_sym(">")) {
            f.kind = TemporalFormula::Kind::Eventually;
        } else {
            f.kind = TemporalFormula::Kind::TimedEventually;
            f.window = parse_window(lx, pp.table);
            lx.expect_sym(">");
        }
        f.p = pp.parse();
        return f;
    }
    if (lx.peek().type == Tok::Sym && lx.peek().text == "[") {
        lx.next();
        if (lx.eat_sym("]")) {
            f.kind = TemporalFormula::Kind::Always;
        } else {
            // the opening '[' of the window interval follows immediately
            if (!(lx.peek().type == Tok::Sym && lx.peek().text == "[")) {
                lx.fail("expected ']' or a '[l,u]' window");
            }
            f.kind = TemporalFormula::Kind::TimedAlways;
            f.window = parse_window(lx, pp.table);
            lx.expect_sym("]");
        }
        f.p = pp.parse();
        return f;
    }
    f.p = pp.parse();
    if (!lx.eat_word("U")) lx.fail("expected 'U'");
    if (lx.peek().type == Tok::Sym && lx.peek().text == "[") {
        f.kind = TemporalFormula::Kind::TimedUntil;
        f.window = parse_window(lx, pp.table);
    } else {
        f.kind = TemporalFormula::Kind::Until;
    }
    f.q = pp.parse();
    return f;
}

}  // namespace

TemporalFormula parse_temporal(const std::string& text, const NetSpec& net) {
    PLexer lx(text);
    TemporalFormula f = parse_temporal_body(lx, net);
    if (!lx.at_end()) lx.fail("unexpected trailing input");
    return f;
}

std::string show(const TemporalFormula& f) {
    using K = TemporalFormula::Kind;
    switch (f.kind) {
        case K::Eventually: return "<> " + show(f.p);
        case K::Always: return "[] " + show(f.p);
        case K::Until: return show(f.p) + " U " + show(f.q);
        case K::TimedEventually: return "<" + show_window(*f.window) + "> " + show(f.p);
        case K::TimedAlways: return "[" + show_window(*f.window) + "] " + show(f.p);
        case K::TimedUntil:
            return show(f.p) + " U " + show_window(*f.window) + " " + show(f.q);
    }
    return "";
}

MCQuery parse_mc_query(const std::string& text, const NetSpec& net) {
    PLexer lx(text);
    MCQuery q;
    if (lx.eat_word("A"))
        q.quant = PathQuant::ForAll;
    else if (lx.eat_word("E"))
        q.quant = PathQuant::Exists;
    else
        lx.fail("expected 'A' or 'E'");
    q.formula = parse_temporal_body(lx, net);
    if (lx.eat_word("in-time")) {
        if (lx.eat_sym("-")) {  // allow negative to fail later with a clear message
            lx.fail("in-time bound must be nonnegative");
        }
        if (lx.peek().type != Tok::Num) lx.fail("expected a rational time bound");
        size_t start = lx.peek().pos, end = lx.peek().end;
        lx.next();
        if (lx.eat_sym("/")) {
            if (lx.peek().type != Tok::Num) lx.fail("expected a denominator");
            end = lx.peek().end;
            lx.next();
        }
        try {
            q.in_time = parse_rat(std::string_view(lx.src).substr(start, end - start));
        } catch (const ParseError& e) {
            throw PropError(e.what());
        }
    }
    if (!lx.at_end()) lx.fail("unexpected trailing input");
    return q;
}

std::string show(const MCQuery& q) {
    std::string out = q.quant == PathQuant::ForAll ? "A " : "E ";
    out += show(q.formula);
    if (q.in_time) out += " in-time " + show(*q.in_time);
    return out;
}

// ---- full LTL -------------------------------------------------------------------

Ltl Ltl::of(Prop p) {
    Ltl f;
    f.kind = Kind::Atom;
    f.atom = std::move(p);
    return f;
}

Ltl Ltl::un(Kind k, Ltl a) {
    Ltl f;
    f.kind = k;
    f.kids.push_back(std::move(a));
    return f;
}

Ltl Ltl::bin(Kind k, Ltl a, Ltl b) {
    Ltl f;
    f.kind = k;
    f.kids.push_back(std::move(a));
    f.kids.push_back(std::move(b));
    return f;
}

namespace {

struct LtlParser {
    PLexer& lx;
    PropParser pp;

    LtlParser(PLexer& l, const NetSpec& n) : lx(l), pp(l, n) {}

    Ltl parse() {  // '->' (right-assoc, lowest)
        Ltl a = parse_or();
        if (lx.eat_sym("->")) return Ltl::bin(Ltl::Kind::Imp, std::move(a), parse());
        return a;
    }
    Ltl parse_or() {
        Ltl a = parse_and();
        while (lx.eat_sym("\\/") || lx.eat_word("or"))
            a = Ltl::bin(Ltl::Kind::Or, std::move(a), parse_and());
        return a;
    }
    Ltl parse_and() {
        Ltl a = parse_until();
        while (lx.eat_sym("/\\") || lx.eat_word("and"))
            a = Ltl::bin(Ltl::Kind::And, std::move(a), parse_until());
        return a;
    }
    Ltl parse_until() {  // right-assoc
        Ltl a = parse_unary();
        if (lx.eat_word("U")) return Ltl::bin(Ltl::Kind::Until, std::move(a), parse_until());
        if (lx.eat_word("R")) return Ltl::bin(Ltl::Kind::Release, std::move(a), parse_until());
        return a;
    }
    Ltl parse_unary() {
        if (lx.eat_sym("~") || lx.eat_word("not"))
            return Ltl::un(Ltl::Kind::Not, parse_unary());
        if (lx.eat_word("X")) return Ltl::un(Ltl::Kind::Next, parse_unary());
        if (lx.peek().type == Tok::Sym && lx.peek().text == "<" &&
            lx.peek(1).type == Tok::Sym && lx.peek(1).text == ">") {
            lx.next();
            lx.next();
            return Ltl::un(Ltl::Kind::Eventually, parse_unary());
        }
        if (lx.peek().type == Tok::Sym && lx.peek().text == "[" &&
            lx.peek(1).type == Tok::Sym && lx.peek(1).text == "]") {
            lx.next();
            lx.next();
            return Ltl::un(Ltl::Kind::Always, parse_unary());
        }
        if (lx.eat_sym("(")) {
            Ltl a = parse();
            lx.expect_sym(")");
            return a;
        }
        return Ltl::of(pp.parse_primary());
    }
};

// precedence: -> = 0, \/ = 1, /\ = 2, U = 3, unary = 4, atom = 5
int ltl_prec(const Ltl& f) {
    switch (f.kind) {
        case Ltl::Kind::Imp: return 0;
        case Ltl::Kind::Or: return 1;
        case Ltl::Kind::And: return 2;
        case Ltl::Kind::Until:
        case Ltl::Kind::Release: return 3;
        case Ltl::Kind::Atom: return 5;
        default: return 4;
    }
}

void show_ltl(const Ltl& f, int ctx, std::string& out) {
    int prec = ltl_prec(f);
    bool parens = prec < ctx || (f.kind == Ltl::Kind::Atom && prop_prec(f.atom) < 2);
    if (parens) out += "(";
    switch (f.kind) {
        case Ltl::Kind::Atom: out += show(f.atom); break;
        case Ltl::Kind::Not:
            out += "~";
            show_ltl(f.kids[0], 4, out);
            break;
        case Ltl::Kind::Next:
            out += "X ";
            show_ltl(f.kids[0], 4, out);
            break;
        case Ltl::Kind::Eventually:
            out += "<> ";
            show_ltl(f.kids[0], 4, out);
            break;
        case Ltl::Kind::Always:
            out += "[] ";
            show_ltl(f.kids[0], 4, out);
            break;
        case Ltl::Kind::Until:
        case Ltl::Kind::Release:
            show_ltl(f.kids[0], 4, out);
            out += f.kind == Ltl::Kind::Until ? " U " : " R ";
            show_ltl(f.kids[1], 3, out);
            break;
        case Ltl::Kind::And:
            show_ltl(f.kids[0], 2, out);
            out += " /\\ ";
            show_ltl(f.kids[1], 3, out);
            break;
        case Ltl::Kind::Or:
            show_ltl(f.kids[0], 1, out);
            out += " \\/ ";
            show_ltl(f.kids[1], 2, out);
            break;
        case Ltl::Kind::Imp:
            show_ltl(f.kids[0], 1, out);
            out += " -> ";
            show_ltl(f.kids[1], 0, out);
            break;
    }
    if (parens) out += ")";
}

}  // namespace

Ltl parse_ltl(const std::string& text, const NetSpec& net) {
    PLexer lx(text);
    LtlParser p(lx, net);
    Ltl f = p.parse();
    if (!lx.at_end()) lx.fail("unexpected trailing input");
    return f;
}

std::string show(const Ltl& f) {
    std::string out;
    show_ltl(f, 0, out);
    return out;
}

}  // namespace tempo
