#include "tempo/net.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tempo {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw NetError("line " + std::to_string(line) + ": " + msg);
}

bool is_ident(const std::string& s) {
    if (s.empty() || (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

bool is_nat(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

// ---- Bag / SymBag ---------------------------------------------------------

void Bag::set(const std::string& place, long long n) {
    if (n < 0) throw NetError("negative multiplicity for place " + place);
    if (n == 0)
        entries.erase(place);
    else
        entries[place] = n;
}

void SymBag::set(const std::string& place, LinExpr e) {
    if (e.terms.empty() && e.constant == 0)
        entries.erase(place);
    else
        entries[place] = std::move(e);
}

bool SymBag::is_ground() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const auto& kv) { return kv.second.terms.empty(); });
}

Bag SymBag::as_ground() const {
    Bag b;
    for (const auto& [place, expr] : entries) {
        if (!expr.terms.empty()) throw EvalError("marking of " + place + " is not ground");
        const Rat& v = expr.constant;
        if (denominator(v) != 1) throw EvalError("marking of " + place + " is not an integer");
        b.set(place, static_cast<long long>(numerator(v)));
    }
    return b;
}

SymBag SymBag::of(const Bag& b) {
    SymBag s;
    for (const auto& [place, n] : b.entries) {
        LinExpr e;
        e.constant = n;
        s.entries.emplace(place, std::move(e));
    }
    return s;
}

bool bag_leq(const Bag& a, const Bag& b) {
    return std::all_of(a.entries.begin(), a.entries.end(),
                       [&](const auto& kv) { return kv.second <= b.at(kv.first); });
}

Constraint sym_bag_leq(const Bag& a, const SymBag& b) {
    Constraint c;
    for (const auto& [place, n] : a.entries) {
        LinExpr lhs;
        lhs.constant = n;
        c.add(make_atom(lhs, Rel::LE, b.at(place)));
    }
    return c;
}

Bag bag_add(const Bag& a, const Bag& b) {
    Bag out = a;
    for (const auto& [place, n] : b.entries) out.set(place, out.at(place) + n);
    return out;
}

Bag bag_sub(const Bag& a, const Bag& b) {
    Bag out = a;
    for (const auto& [place, n] : b.entries) {
        long long left = out.at(place) - n;
        if (left < 0) throw NetError("marking underflow at place " + place);
        out.set(place, left);
    }
    return out;
}

SymBag sym_bag_add(const SymBag& a, const Bag& b) {
    SymBag out = a;
    for (const auto& [place, n] : b.entries) {
        LinExpr e = out.at(place);
        e.constant += n;
        out.set(place, std::move(e));
    }
    return out;
}

SymBag sym_bag_sub(const SymBag& a, const Bag& b) {
    SymBag out = a;
    for (const auto& [place, n] : b.entries) {
        LinExpr e = out.at(place);
        e.constant -= n;
        out.set(place, std::move(e));
    }
    return out;
}

// ---- structural predicates ------------------------------------------------

bool enabled(const Bag& m, const Transition& t) { return bag_leq(t.pre, m); }

bool inhibited(const Bag& m, const Transition& t) {
    return std::any_of(t.inhibit.entries.begin(), t.inhibit.entries.end(),
                       [&](const auto& kv) { return kv.second > 0 && m.at(kv.first) >= kv.second; });
}

bool active(const Bag& m, const Transition& t) { return enabled(m, t) && !inhibited(m, t); }

bool newly_enabled(const Transition& t, const Bag& m, const Transition& fired) {
    Bag interm = bag_sub(m, fired.pre);
    if (!bag_leq(t.pre, bag_add(interm, fired.post))) return false;
    if (t.label == fired.label) return true;
    return !bag_leq(t.pre, interm);
}

Constraint sym_enabled(const SymBag& m, const Transition& t) { return sym_bag_leq(t.pre, m); }

Constraint sym_not_inhibited(const SymBag& m, const Transition& t) {
    Constraint c;
    for (const auto& [place, w] : t.inhibit.entries) {
        if (w <= 0) continue;
        LinExpr rhs;
        rhs.constant = w;
        c.add(make_atom(m.at(place), Rel::LT, rhs));
    }
    return c;
}

Constraint sym_active(const SymBag& m, const Transition& t) {
    return sym_enabled(m, t).conjoin(sym_not_inhibited(m, t));
}

// ---- NetSpec helpers --------------------------------------------------------

const Transition* NetSpec::find(const std::string& label) const {
    int i = index_of(label);
    return i < 0 ? nullptr : &transitions[i];
}

int NetSpec::index_of(const std::string& label) const {
    for (size_t i = 0; i < transitions.size(); ++i)
        if (transitions[i].label == label) return static_cast<int>(i);
    return -1;
}

bool NetSpec::has_place(const std::string& place) const {
    return std::find(places.begin(), places.end(), place) != places.end();
}

SymbolTable NetSpec::symbols() const {
    SymbolTable table;
    for (const auto& v : time_params) table.emplace(v.name, v);
    for (const auto& v : mark_params) table.emplace(v.name, v);
    return table;
}

bool NetSpec::operator==(const NetSpec& o) const {
    // warnings are loader diagnostics, not part of the net's identity
    return name == o.name && places == o.places && time_params == o.time_params &&
           mark_params == o.mark_params && transitions == o.transitions &&
           initial_marking == o.initial_marking && k0 == o.k0 && user_atoms == o.user_atoms;
}

// ---- validation shared by the text and JSON loaders -------------------------

namespace {

bool is_reserved(const std::string& s) {
    static const std::set<std::string> words = {"net",     "param", "intparam", "place",
                                                "trans",   "marking", "constraint", "in",
                                                "inhibit", "none",  "inf",      "and",
                                                "or",      "not",   "time"};
    return words.count(s) > 0;
}

// Rebuilds K0 from implied atoms + user atoms, checks satisfiability, interval
// non-emptiness (conjoining satisfiable-but-not-implied atoms with a warning),
// and referential integrity of every bag and expression.
void validate_net(NetSpec& net) {
    if (net.name.empty() || !is_ident(net.name)) throw NetError("missing or invalid net name");
    if (net.transitions.empty()) throw NetError("net has no transitions");

    std::set<std::string> seen;
    auto declare = [&](const std::string& s, const char* what) {
        if (!is_ident(s) || is_reserved(s))
            throw NetError(std::string("invalid ") + what + " name " + s);
        if (!seen.insert(s).second) throw NetError("duplicate symbol " + s);
    };
    for (const auto& p : net.places) declare(p, "place");
    for (const auto& v : net.time_params) declare(v.name, "parameter");
    for (const auto& v : net.mark_params) declare(v.name, "parameter");
    for (const auto& t : net.transitions) declare(t.label, "transition");

    std::set<VarId> time_set(net.time_params.begin(), net.time_params.end());
    std::set<VarId> param_set = time_set;
    param_set.insert(net.mark_params.begin(), net.mark_params.end());

    auto check_bag = [&](const Bag& b, const std::string& where) {
        for (const auto& [place, _] : b.entries)
            if (!net.has_place(place)) throw NetError("undeclared place " + place + " in " + where);
    };
    auto check_expr = [&](const LinExpr& e, const std::set<VarId>& allowed, const std::string& where) {
        for (const auto& [v, _] : e.terms)
            if (!allowed.count(v)) throw NetError("undeclared symbol " + v.name + " in " + where);
    };

    for (const auto& t : net.transitions) {
        check_bag(t.pre, "transition " + t.label);
        check_bag(t.post, "transition " + t.label);
        check_bag(t.inhibit, "transition " + t.label);
        check_expr(t.interval.lower, time_set, "interval of " + t.label);
        if (t.interval.upper) check_expr(*t.interval.upper, time_set, "interval of " + t.label);
    }
    for (const auto& [place, expr] : net.initial_marking.entries) {
        if (!net.has_place(place)) throw NetError("undeclared place " + place + " in marking");
        check_expr(expr, param_set, "marking of " + place);
    }
    for (const auto& a : net.user_atoms) check_expr(a.lhs, param_set, "constraint");

    Constraint k0;
    for (const auto& v : param_set) k0.add(make_atom(LinExpr{}, Rel::LE, LinExpr::var(v)));
    for (const auto& a : net.user_atoms) k0.add(a);
    if (!is_sat(k0)) throw NetError("initial constraint is unsatisfiable");

    for (const auto& t : net.transitions) {
        if (!t.interval.upper) continue;
        Atom nonempty = make_atom(t.interval.lower, Rel::LE, *t.interval.upper);
        Constraint goal;
        goal.add(nonempty);
        if (implies(k0, goal)) continue;
        Constraint widened = k0.conjoin(goal);
        if (!is_sat(widened))
            throw NetError("interval of " + t.label + " is empty under the initial constraint");
        k0 = std::move(widened);
        net.user_atoms.push_back(nonempty);
        net.warnings.push_back("interval of " + t.label +
                               " may be empty; added constraint " + show(nonempty));
    }
    net.k0 = std::move(k0);
}

Bag parse_bag(const std::vector<std::string>& toks, size_t from, size_t to, int line) {
    Bag b;
    if (from >= to) fail(line, "expected a bag (write none for the empty bag)");
    if (to - from == 1 && toks[from] == "none") return b;
    for (size_t i = from; i < to; ++i) {
        const std::string& tok = toks[i];
        auto star = tok.find('*');
        std::string place = star == std::string::npos ? tok : tok.substr(0, star);
        long long mult = 1;
        if (star != std::string::npos) {
            std::string m = tok.substr(star + 1);
            if (!is_nat(m)) fail(line, "bad multiplicity in " + tok);
            mult = std::stoll(m);
        }
        if (!is_ident(place)) fail(line, "bad place token " + tok);
        if (b.entries.count(place)) fail(line, "place " + place + " repeated in bag");
        b.set(place, mult);
    }
    return b;
}

}  // namespace

// ---- text format ------------------------------------------------------------

NetSpec parse_net(const std::string& text) {
    std::vector<std::pair<int, std::string>> lines;
    {
        std::istringstream in(text);
        std::string raw;
        int n = 0;
        while (std::getline(in, raw)) {
            ++n;
            auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            raw = trim(raw);
            if (!raw.empty()) lines.emplace_back(n, raw);
        }
    }
    if (lines.empty()) throw NetError("empty net description");

    NetSpec net;
    // pass 1: declarations
    for (const auto& [lineno, content] : lines) {
        auto toks = split_ws(content);
        const std::string& kw = toks[0];
        if (kw == "net") {
            if (toks.size() != 2 || !is_ident(toks[1])) fail(lineno, "expected: net <name>");
            if (!net.name.empty()) fail(lineno, "duplicate net line");
            net.name = toks[1];
        } else if (kw == "param" || kw == "intparam") {
            if (toks.size() < 2) fail(lineno, "expected at least one name after " + kw);
            for (size_t i = 1; i < toks.size(); ++i) {
                if (!is_ident(toks[i])) fail(lineno, "bad parameter name " + toks[i]);
                if (kw == "param")
                    net.time_params.push_back(time_param(toks[i]));
                else
                    net.mark_params.push_back(mark_param(toks[i]));
            }
        } else if (kw == "place") {
            if (toks.size() < 2) fail(lineno, "expected at least one name after place");
            for (size_t i = 1; i < toks.size(); ++i) {
                if (!is_ident(toks[i])) fail(lineno, "bad place name " + toks[i]);
                net.places.push_back(toks[i]);
            }
        } else if (kw != "trans" && kw != "marking" && kw != "constraint") {
            fail(lineno, "unknown directive " + kw);
        }
    }

    SymbolTable param_table;
    for (const auto& v : net.time_params) param_table.emplace(v.name, v);
    for (const auto& v : net.mark_params) param_table.emplace(v.name, v);
    SymbolTable time_table;
    for (const auto& v : net.time_params) time_table.emplace(v.name, v);

    // pass 2: structure
    std::set<std::string> marked;
    for (const auto& [lineno, content] : lines) {
        auto toks = split_ws(content);
        const std::string& kw = toks[0];
        if (kw == "trans") {
            if (toks.size() < 7 || toks[2] != ":")
                fail(lineno, "expected: trans <name> : <bag> -> <bag> [inhibit <bag>] in [l, u]");
            Transition t;
            t.label = toks[1];
            if (!is_ident(t.label)) fail(lineno, "bad transition name " + t.label);
            auto find_tok = [&](const std::string& what, size_t from) {
                for (size_t i = from; i < toks.size(); ++i)
                    if (toks[i] == what) return i;
                return toks.size();
            };
            size_t arrow = find_tok("->", 3);
            size_t inkw = find_tok("in", arrow);
            size_t inhkw = find_tok("inhibit", arrow);
            if (arrow == toks.size() || inkw == toks.size()) fail(lineno, "malformed trans line");
            t.pre = parse_bag(toks, 3, arrow, lineno);
            if (inhkw < inkw) {
                t.post = parse_bag(toks, arrow + 1, inhkw, lineno);
                t.inhibit = parse_bag(toks, inhkw + 1, inkw, lineno);
            } else {
                t.post = parse_bag(toks, arrow + 1, inkw, lineno);
            }
            std::string ivl;
            for (size_t i = inkw + 1; i < toks.size(); ++i) {
                if (i > inkw + 1) ivl += ' ';
                ivl += toks[i];
            }
            if (ivl.size() < 2 || ivl.front() != '[' || ivl.back() != ']')
                fail(lineno, "expected interval [l, u] at end of trans line");
            ivl = ivl.substr(1, ivl.size() - 2);
            auto comma = ivl.find(',');
            if (comma == std::string::npos) fail(lineno, "interval needs two endpoints");
            std::string lo = trim(ivl.substr(0, comma)), hi = trim(ivl.substr(comma + 1));
            try {
                t.interval.lower = parse_linexpr(lo, &time_table);
                if (hi != "inf") t.interval.upper = parse_linexpr(hi, &time_table);
            } catch (const ParseError& e) {
                fail(lineno, e.what());
            }
            net.transitions.push_back(std::move(t));
        } else if (kw == "marking") {
            for (size_t i = 1; i < toks.size(); ++i) {
                auto eq = toks[i].find('=');
                if (eq == std::string::npos) fail(lineno, "expected place=count, got " + toks[i]);
                std::string place = toks[i].substr(0, eq), val = toks[i].substr(eq + 1);
                if (!marked.insert(place).second) fail(lineno, "marking repeats place " + place);
                LinExpr e;
                if (is_nat(val)) {
                    e.constant = Rat(val.c_str());
                } else if (is_ident(val)) {
                    auto it = param_table.find(val);
                    if (it == param_table.end() || it->second.kind != VarKind::MarkParam)
                        fail(lineno, val + " is not a declared intparam");
                    e += LinExpr::var(it->second);
                } else {
                    fail(lineno, "bad marking count " + val);
                }
                net.initial_marking.set(place, std::move(e));
            }
        } else if (kw == "constraint") {
            std::string rest = trim(content.substr(10));
            try {
                Constraint c = parse_constraint(rest, &param_table);
                if (c.contradictory) fail(lineno, "constraint line is trivially false");
                for (const auto& a : c.atoms) net.user_atoms.push_back(a);
            } catch (const ParseError& e) {
                fail(lineno, e.what());
            }
        }
    }

    validate_net(net);
    return net;
}

NetSpec load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NetError(path + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_net(buf.str());
    } catch (const NetError& e) {
        throw NetError(path + ": " + e.what());
    }
}

namespace {

std::string show_bag(const Bag& b) {
    if (b.entries.empty()) return "none";
    std::string out;
    for (const auto& [place, n] : b.entries) {
        if (!out.empty()) out += ' ';
        out += place;
        if (n != 1) out += "*" + std::to_string(n);
    }
    return out;
}

std::string show_marking_count(const std::string& place, const LinExpr& e) {
    if (e.terms.empty()) {
        if (denominator(e.constant) != 1 || e.constant < 0)
            throw NetError("marking of " + place + " is not printable as a count");
        return show(e.constant);
    }
    if (e.constant == 0 && e.terms.size() == 1 && e.terms.begin()->second == 1)
        return e.terms.begin()->first.name;
    throw NetError("marking of " + place + " is not printable as a count");
}

}  // namespace

std::string show(const NetSpec& net) {
    std::ostringstream out;
    out << "net " << net.name << "\n";
    if (!net.time_params.empty()) {
        out << "param";
        for (const auto& v : net.time_params) out << ' ' << v.name;
        out << "\n";
    }
    if (!net.mark_params.empty()) {
        out << "intparam";
        for (const auto& v : net.mark_params) out << ' ' << v.name;
        out << "\n";
    }
    out << "place";
    for (const auto& p : net.places) out << ' ' << p;
    out << "\n";
    for (const auto& t : net.transitions) {
        out << "trans " << t.label << " : " << show_bag(t.pre) << " -> " << show_bag(t.post);
        if (!t.inhibit.entries.empty()) out << " inhibit " << show_bag(t.inhibit);
        out << " in [" << show(t.interval.lower) << ", "
            << (t.interval.upper ? show(*t.interval.upper) : std::string("inf")) << "]\n";
    }
    if (!net.initial_marking.entries.empty()) {
        out << "marking";
        // emit in place-declaration order for stable output
        for (const auto& p : net.places) {
            auto it = net.initial_marking.entries.find(p);
            if (it != net.initial_marking.entries.end())
                out << ' ' << p << '=' << show_marking_count(p, it->second);
        }
        out << "\n";
    }
    for (const auto& a : net.user_atoms) out << "constraint " << show(a) << "\n";
    return out.str();
}

// ---- JSON mirror -------------------------------------------------------------

std::string net_to_json(const NetSpec& net) {
    nlohmann::ordered_json j;
    j["name"] = net.name;
    j["places"] = net.places;
    j["time_params"] = nlohmann::ordered_json::array();
    for (const auto& v : net.time_params) j["time_params"].push_back(v.name);
    j["mark_params"] = nlohmann::ordered_json::array();
    for (const auto& v : net.mark_params) j["mark_params"].push_back(v.name);
    j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& t : net.transitions) {
        nlohmann::ordered_json jt;
        jt["label"] = t.label;
        auto bag = [](const Bag& b) {
            nlohmann::ordered_json out = nlohmann::ordered_json::object();
            for (const auto& [place, n] : b.entries) out[place] = n;
            return out;
        };
        jt["pre"] = bag(t.pre);
        jt["post"] = bag(t.post);
        jt["inhibit"] = bag(t.inhibit);
        jt["interval"]["lower"] = show(t.interval.lower);
        if (t.interval.upper)
            jt["interval"]["upper"] = show(*t.interval.upper);
        else
            jt["interval"]["upper"] = nullptr;
        j["transitions"].push_back(std::move(jt));
    }
    j["initial_marking"] = nlohmann::ordered_json::object();
    for (const auto& [place, e] : net.initial_marking.entries)
        j["initial_marking"][place] = show(e);
    j["k0"] = show(net.k0);
    j["user_atoms"] = nlohmann::ordered_json::array();
    for (const auto& a : net.user_atoms) j["user_atoms"].push_back(show(a));
    return j.dump(2);
}

NetSpec net_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw NetError(std::string("bad JSON: ") + e.what());
    }
    try {
        NetSpec net;
        net.name = j.at("name").get<std::string>();
        net.places = j.at("places").get<std::vector<std::string>>();
        for (const auto& s : j.at("time_params"))
            net.time_params.push_back(time_param(s.get<std::string>()));
        for (const auto& s : j.at("mark_params"))
            net.mark_params.push_back(mark_param(s.get<std::string>()));
        SymbolTable param_table;
        for (const auto& v : net.time_params) param_table.emplace(v.name, v);
        for (const auto& v : net.mark_params) param_table.emplace(v.name, v);
        SymbolTable time_table;
        for (const auto& v : net.time_params) time_table.emplace(v.name, v);

        auto bag = [](const nlohmann::json& jb) {
            Bag b;
            for (auto it = jb.begin(); it != jb.end(); ++it)
                b.set(it.key(), it.value().get<long long>());
            return b;
        };
        for (const auto& jt : j.at("transitions")) {
            Transition t;
            t.label = jt.at("label").get<std::string>();
            t.pre = bag(jt.at("pre"));
            t.post = bag(jt.at("post"));
            t.inhibit = bag(jt.at("inhibit"));
            t.interval.lower = parse_linexpr(jt.at("interval").at("lower").get<std::string>(), &time_table);
            const auto& up = jt.at("interval").at("upper");
            if (!up.is_null()) t.interval.upper = parse_linexpr(up.get<std::string>(), &time_table);
            net.transitions.push_back(std::move(t));
        }
        const auto& jm = j.at("initial_marking");
        for (auto it = jm.begin(); it != jm.end(); ++it)
            net.initial_marking.set(it.key(), parse_linexpr(it.value().get<std::string>(), &param_table));
        for (const auto& s : j.at("user_atoms")) {
            Constraint c = parse_constraint(s.get<std::string>(), &param_table);
            for (const auto& a : c.atoms) net.user_atoms.push_back(a);
        }
        validate_net(net);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw NetError(std::string("bad net JSON: ") + e.what());
    } catch (const NetError&) {
        throw;
    } catch (const ParseError& e) {
        throw NetError(std::string("bad net JSON: ") + e.what());
    }
}

// ---- parameter instantiation ---------------------------------------------------

NetSpec ground_instance(const NetSpec& net, const std::map<std::string, Rat>& pi_time,
                        const std::map<std::string, long long>& pi_mark) {
    std::map<VarId, Rat> point;
    for (const auto& v : net.time_params) {
        auto it = pi_time.find(v.name);
        if (it == pi_time.end()) throw NetError("no value for parameter " + v.name);
        if (it->second < 0) throw NetError("negative value for parameter " + v.name);
        point.emplace(v, it->second);
    }
    for (const auto& v : net.mark_params) {
        auto it = pi_mark.find(v.name);
        if (it == pi_mark.end()) throw NetError("no value for parameter " + v.name);
        point.emplace(v, Rat(it->second));
    }
    if (!net.k0.holds_at(point))
        throw NetError("parameter values violate the net's initial constraint");

    NetSpec out;
    out.name = net.name;
    out.places = net.places;
    auto ground = [&](const LinExpr& e) {
        LinExpr g;
        g.constant = e.eval(point);
        return g;
    };
    for (const auto& t : net.transitions) {
        Transition gt = t;
        gt.interval.lower = ground(t.interval.lower);
        if (t.interval.upper) gt.interval.upper = ground(*t.interval.upper);
        out.transitions.push_back(std::move(gt));
    }
    for (const auto& [place, e] : net.initial_marking.entries) out.initial_marking.set(place, ground(e));
    validate_net(out);
    return out;
}

}  // namespace tempo
