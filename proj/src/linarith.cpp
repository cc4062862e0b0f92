#include "tempo/linarith.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <span>
#include <sstream>

namespace tempo {

namespace mp = boost::multiprecision;

// ---------------------------------------------------------------------------
// Rationals

Rat parse_rat(std::string_view text) {
  size_t i = 0;
  auto fail = [&](const std::string& why) -> Rat {
    throw ParseError("bad rational '" + std::string(text) + "': " + why);
  };
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    neg = text[i] == '-';
    ++i;
  }
  auto digits = [&]() -> Int {
    size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      ++i;
    if (i == start) fail("digits expected");
    return Int(std::string(text.substr(start, i - start)));
  };
  Int num = digits();
  Int den = 1;
  if (i < text.size() && text[i] == '/') {
    ++i;
    den = digits();
    if (den == 0) fail("zero denominator");
  } else if (i < text.size() && text[i] == '.') {
    ++i;
    size_t start = i;
    Int frac = digits();
    for (size_t k = start; k < i; ++k) den *= 10;
    num = num * den + frac;
  }
  if (i != text.size()) fail("trailing characters");
  Rat r(num, den);
  return neg ? Rat(-r) : r;
}

std::string show(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// ---------------------------------------------------------------------------
// Variables

std::string show(const VarId& v) {
  switch (v.kind) {
    case VarKind::TimeParam:
    case VarKind::MarkParam:
      return v.name;
    case VarKind::Clock:
      return "clock(" + v.name + ")";
    case VarKind::Delta:
      return "d" + std::to_string(v.instance);
    case VarKind::GlobalTime:
      return "time";
    case VarKind::Now:
      return "now(" + v.name + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Linear expressions

LinExpr LinExpr::var(VarId v, Rat coeff) {
  LinExpr e;
  if (coeff != 0) e.terms.emplace(std::move(v), std::move(coeff));
  return e;
}

Rat LinExpr::coeff(const VarId& v) const {
  auto it = terms.find(v);
  return it == terms.end() ? Rat(0) : it->second;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant += o.constant;
  for (const auto& [v, c] : o.terms) {
    auto [it, fresh] = terms.try_emplace(v, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant -= o.constant;
  for (const auto& [v, c] : o.terms) {
    auto [it, fresh] = terms.try_emplace(v, -c);
    if (!fresh) {
      it->second -= c;
      if (it->second == 0) terms.erase(it);
    }
  }
  return *this;
}

LinExpr& LinExpr::operator*=(const Rat& k) {
  if (k == 0) {
    terms.clear();
    constant = 0;
    return *this;
  }
  constant *= k;
  for (auto& [v, c] : terms) c *= k;
  return *this;
}

LinExpr LinExpr::subst(const VarId& v, const LinExpr& e) const {
  auto it = terms.find(v);
  if (it == terms.end()) return *this;
  Rat c = it->second;
  LinExpr out = *this;
  out.terms.erase(v);
  out += c * LinExpr(e);
  return out;
}

Rat LinExpr::eval(const std::map<VarId, Rat>& point) const {
  Rat acc = constant;
  for (const auto& [v, c] : terms) {
    auto it = point.find(v);
    if (it == point.end())
      throw EvalError("unassigned variable " + show(v) + " in evaluation");
    acc += c * it->second;
  }
  return acc;
}

static bool linexpr_less(const LinExpr& a, const LinExpr& b) {
  auto ai = a.terms.begin(), bi = b.terms.begin();
  for (; ai != a.terms.end() && bi != b.terms.end(); ++ai, ++bi) {
    if (ai->first != bi->first) return ai->first < bi->first;
    if (ai->second != bi->second) return ai->second < bi->second;
  }
  if (ai != a.terms.end() || bi != b.terms.end()) return bi != b.terms.end();
  return a.constant < b.constant;
}

// ---------------------------------------------------------------------------
// Atoms

static Rat floor_rat(const Rat& r) {
  Int n = numerator(r), d = denominator(r);  // d > 0 by representation
  Int q = n / d;                             // truncates toward zero
  if (r < 0 && n % d != 0) q -= 1;
  return Rat(q);
}

Atom::Atom(LinExpr e, Rel r) : lhs(std::move(e)), rel(r) {
  if (lhs.terms.empty()) {
    // Constant atoms only need their sign.
    if (lhs.constant > 0)
      lhs.constant = 1;
    else if (lhs.constant < 0)
      lhs.constant = -1;
    return;
  }
  // Scale by a positive rational so coefficients are integers with gcd 1.
  Int num_gcd = 0, den_lcm = 1;
  auto account = [&](const Rat& q) {
    if (q == 0) return;
    num_gcd = mp::gcd(num_gcd, Int(mp::abs(numerator(q))));
    den_lcm = mp::lcm(den_lcm, Int(denominator(q)));
  };
  for (const auto& [v, c] : lhs.terms) account(c);
  account(lhs.constant);
  Rat scale(den_lcm, num_gcd);
  if (scale != 1) lhs *= scale;
  // Equalities are symmetric; fix the sign of the leading coefficient.
  if (rel == Rel::EQ && lhs.terms.begin()->second < 0) lhs *= Rat(-1);

  // Integral tightening. Marking parameters and marking observation variables
  // take integer values, so when the variable part is an integer combination
  // of them the atom can be pulled to the next representable point: x > 0
  // becomes x >= 1, x < 1 becomes x <= 0, and a fractional equality is plainly
  // false. The solver itself stays rational; this is what keeps synthesized
  // marking-parameter regions in their integer form.
  bool integral = std::all_of(lhs.terms.begin(), lhs.terms.end(), [](const auto& t) {
    return t.first.kind == VarKind::MarkParam || t.first.kind == VarKind::Now;
  });
  if (!integral) return;
  Int g = 0;
  for (const auto& [v, c] : lhs.terms) g = mp::gcd(g, Int(mp::abs(numerator(c))));
  // Post-scaling every number is an integer, so with S the variable part the
  // atom reads S + c REL 0, i.e. S/g REL bound with S/g integer-valued.
  Rat bound = Rat(-lhs.constant) / Rat(g);
  Rat fl = floor_rat(bound);
  auto rebuild = [&](const Rat& new_bound) {
    lhs.constant = 0;
    lhs *= Rat(Int(1), g);
    lhs.constant = -new_bound;
  };
  switch (rel) {
    case Rel::LT:  // S/g < bound  ==  S/g <= (integral bound) - 1 | floor(bound)
      rebuild(bound == fl ? Rat(fl - 1) : fl);
      rel = Rel::LE;
      break;
    case Rel::LE:  // S/g <= bound  ==  S/g <= floor(bound)
      rebuild(fl);
      break;
    case Rel::EQ:
      if (bound != fl) {  // integer = fraction: constant falsehood
        lhs = LinExpr(Rat(1));
        rel = Rel::LT;  // 1 < 0
        return;
      }
      rebuild(bound);
      break;
  }
}

std::optional<bool> Atom::constant_value() const {
  if (!lhs.terms.empty()) return std::nullopt;
  switch (rel) {
    case Rel::LT:
      return lhs.constant < 0;
    case Rel::LE:
      return lhs.constant <= 0;
    case Rel::EQ:
      return lhs.constant == 0;
  }
  return std::nullopt;
}

bool Atom::holds_at(const std::map<VarId, Rat>& point) const {
  Rat v = lhs.eval(point);
  switch (rel) {
    case Rel::LT:
      return v < 0;
    case Rel::LE:
      return v <= 0;
    case Rel::EQ:
      return v == 0;
  }
  return false;
}

std::vector<Atom> Atom::negation() const {
  switch (rel) {
    case Rel::LT:  // not(e < 0) == -e <= 0
      return {Atom(-LinExpr(lhs), Rel::LE)};
    case Rel::LE:  // not(e <= 0) == -e < 0
      return {Atom(-LinExpr(lhs), Rel::LT)};
    case Rel::EQ:  // not(e = 0) == e < 0 or -e < 0
      return {Atom(LinExpr(lhs), Rel::LT), Atom(-LinExpr(lhs), Rel::LT)};
  }
  return {};
}

bool atom_less(const Atom& a, const Atom& b) {
  if (a.rel != b.rel) return static_cast<int>(a.rel) < static_cast<int>(b.rel);
  return linexpr_less(a.lhs, b.lhs);
}

Atom make_atom(LinExpr a, Rel rel, LinExpr b) {
  return Atom(std::move(a) - std::move(b), rel);
}

// ---------------------------------------------------------------------------
// Constraints

void Constraint::add(Atom a) {
  if (contradictory) return;
  if (auto v = a.constant_value()) {
    if (!*v) {
      contradictory = true;
      atoms.clear();
    }
    return;
  }
  auto it = std::lower_bound(atoms.begin(), atoms.end(), a, atom_less);
  if (it != atoms.end() && *it == a) return;
  atoms.insert(it, std::move(a));
}

Constraint Constraint::conjoin(const Constraint& o) const {
  if (contradictory || o.contradictory) return falsity();
  Constraint out = *this;
  for (const Atom& a : o.atoms) out.add(a);
  return out;
}

Constraint Constraint::conjoin(Atom a) const {
  Constraint out = *this;
  out.add(std::move(a));
  return out;
}

std::set<VarId> Constraint::vars() const {
  std::set<VarId> out;
  for (const Atom& a : atoms)
    for (const auto& [v, c] : a.lhs.terms) out.insert(v);
  return out;
}

bool Constraint::holds_at(const std::map<VarId, Rat>& point) const {
  if (contradictory) return false;
  return std::all_of(atoms.begin(), atoms.end(),
                     [&](const Atom& a) { return a.holds_at(point); });
}

bool Formula::holds_at(const std::map<VarId, Rat>& point) const {
  return std::any_of(disjuncts.begin(), disjuncts.end(),
                     [&](const Constraint& c) { return c.holds_at(point); });
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin core.  Raw routines work on plain atom vectors and never
// call simplify, so the implication-based simplifier can use them freely.

namespace {

using Atoms = std::vector<Atom>;

// Exact one-variable projection: equalities substitute, inequalities combine
// pairwise (upper x lower); a combined atom is strict iff either parent is.
Atoms fme_step(const Atoms& atoms, const VarId& v) {
  for (size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    if (a.rel != Rel::EQ) continue;
    Rat c = a.lhs.coeff(v);
    if (c == 0) continue;
    LinExpr rest = a.lhs;
    rest.terms.erase(v);
    LinExpr solution = (Rat(-1) / c) * std::move(rest);  // v = solution
    Atoms out;
    out.reserve(atoms.size() - 1);
    for (size_t j = 0; j < atoms.size(); ++j) {
      if (j == i) continue;
      out.emplace_back(atoms[j].lhs.subst(v, solution), atoms[j].rel);
    }
    return out;
  }
  Atoms uppers, lowers, rest;
  for (const Atom& a : atoms) {
    Rat c = a.lhs.coeff(v);
    if (c == 0)
      rest.push_back(a);
    else if (c > 0)
      uppers.push_back(a);
    else
      lowers.push_back(a);
  }
  for (const Atom& up : uppers) {
    Rat cu = up.lhs.coeff(v);
    for (const Atom& lo : lowers) {
      Rat cl = lo.lhs.coeff(v);
      LinExpr comb = (-cl) * LinExpr(up.lhs) + cu * LinExpr(lo.lhs);
      Rel r = (up.rel == Rel::LT || lo.rel == Rel::LT) ? Rel::LT : Rel::LE;
      rest.emplace_back(std::move(comb), r);
    }
  }
  return rest;
}

// Next variable to eliminate: fewest occurrences first (standard heuristic
// against quadratic growth); ties broken by variable order for determinism.
std::optional<VarId> pick_var(const Atoms& atoms, const std::set<VarId>& vars) {
  std::map<VarId, int> count;
  for (const Atom& a : atoms)
    for (const auto& [v, c] : a.lhs.terms)
      if (vars.contains(v)) ++count[v];
  if (count.empty()) return std::nullopt;
  auto best = count.begin();
  for (auto it = std::next(count.begin()); it != count.end(); ++it)
    if (it->second < best->second) best = it;
  return best->first;
}

// Full rational-satisfiability decision by exhaustive elimination.
bool atoms_sat(Atoms atoms) {
  for (;;) {
    Atoms pending;
    pending.reserve(atoms.size());
    for (const Atom& a : atoms) {
      if (auto v = a.constant_value()) {
        if (!*v) return false;
      } else {
        pending.push_back(a);
      }
    }
    if (pending.empty()) return true;
    std::set<VarId> vars;
    for (const Atom& a : pending)
      for (const auto& [v, c] : a.lhs.terms) vars.insert(v);
    auto v = pick_var(pending, vars);
    assert(v.has_value());
    atoms = fme_step(pending, *v);
  }
}

bool atoms_sat_with(const Atoms& atoms, const Atom& extra) {
  Atoms copy = atoms;
  copy.push_back(extra);
  return atoms_sat(std::move(copy));
}

// Redundancy pruning is quadratic in is_sat calls; past this many atoms we
// settle for deduplication and keep going.
constexpr size_t kSimplifyCap = 64;

}  // namespace

Constraint simplify(const Constraint& c) {
  if (c.contradictory) return Constraint::falsity();
  Constraint out;
  for (const Atom& a : c.atoms) {
    out.add(a);
    if (out.contradictory) return Constraint::falsity();
  }
  if (out.atoms.size() > 1 && out.atoms.size() <= kSimplifyCap) {
    // Drop any atom implied by the others (checked via its negation);
    // scanning from the back keeps the order-stable representatives.
    for (size_t i = out.atoms.size(); i-- > 0;) {
      Atoms others;
      others.reserve(out.atoms.size() - 1);
      for (size_t j = 0; j < out.atoms.size(); ++j)
        if (j != i) others.push_back(out.atoms[j]);
      bool redundant = true;
      for (const Atom& nb : out.atoms[i].negation()) {
        if (atoms_sat_with(others, nb)) {
          redundant = false;
          break;
        }
      }
      if (redundant) out.atoms.erase(out.atoms.begin() + i);
    }
  }
  if (!out.atoms.empty() && !atoms_sat(out.atoms)) return Constraint::falsity();
  return out;
}

bool is_sat(const Constraint& c) {
  return !c.contradictory && atoms_sat(c.atoms);
}

bool is_sat(const Formula& f) {
  return std::any_of(f.disjuncts.begin(), f.disjuncts.end(),
                     [](const Constraint& c) { return is_sat(c); });
}

Constraint eliminate(const std::set<VarId>& vars, const Constraint& c) {
  Constraint cur = simplify(c);
  for (;;) {
    if (cur.contradictory) return Constraint::falsity();
    auto v = pick_var(cur.atoms, vars);
    if (!v) return cur;
    Atoms next = fme_step(cur.atoms, *v);
    Constraint nc;
    for (Atom& a : next) {
      nc.add(std::move(a));
      if (nc.contradictory) return Constraint::falsity();
    }
    cur = simplify(nc);
  }
}

Formula eliminate(const std::set<VarId>& vars, const Formula& f) {
  Formula out;
  for (const Constraint& d : f.disjuncts) {
    Constraint e = eliminate(vars, d);
    if (!e.contradictory &&
        std::find(out.disjuncts.begin(), out.disjuncts.end(), e) ==
            out.disjuncts.end())
      out.disjuncts.push_back(std::move(e));
  }
  return out;
}

Constraint project(const Constraint& c,
                   const std::function<bool(const VarId&)>& keep) {
  std::set<VarId> drop;
  for (const VarId& v : c.vars())
    if (!keep(v)) drop.insert(v);
  return eliminate(drop, c);
}

std::optional<std::map<VarId, Rat>> sample_model(const Constraint& c0) {
  Constraint c = simplify(c0);
  if (!is_sat(c)) return std::nullopt;

  // stage[i] still mentions order[i..]; eliminating in front order lets the
  // back-substitution below see only already-assigned variables.
  std::vector<VarId> order;
  for (const VarId& v : c.vars()) order.push_back(v);
  std::vector<Constraint> stage{c};
  for (const VarId& v : order) stage.push_back(eliminate({v}, stage.back()));

  std::map<VarId, Rat> point;
  for (std::size_t i = order.size(); i-- > 0;) {
    const VarId& v = order[i];
    std::optional<Rat> lo, hi, pin;
    bool lo_strict = false, hi_strict = false;
    for (const Atom& a : stage[i].atoms) {
      Rat k = a.lhs.coeff(v);
      if (k == 0) continue;
      LinExpr rest = a.lhs;
      rest -= LinExpr::var(v, k);
      Rat bound = -rest.eval(point) / k;
      if (a.rel == Rel::EQ) {
        pin = bound;
      } else if (k > 0) {  // v <(=) bound
        bool strict = a.rel == Rel::LT;
        if (!hi || bound < *hi) {
          hi = bound;
          hi_strict = strict;
        } else if (bound == *hi && strict) {
          hi_strict = true;
        }
      } else {  // v >(=) bound
        bool strict = a.rel == Rel::LT;
        if (!lo || bound > *lo) {
          lo = bound;
          lo_strict = strict;
        } else if (bound == *lo && strict) {
          lo_strict = true;
        }
      }
    }
    Rat val;
    if (pin)
      val = *pin;
    else if (lo && hi)
      val = *lo == *hi ? *lo : (*lo + *hi) / 2;
    else if (lo)
      val = lo_strict ? *lo + 1 : *lo;
    else if (hi)
      val = hi_strict ? *hi - 1 : *hi;
    else
      val = Rat(0);
    point[v] = val;
  }
  return point;
}

std::optional<std::map<VarId, Rat>> sample_model(const Formula& f) {
  for (const Constraint& d : f.disjuncts)
    if (auto m = sample_model(d)) return m;
  return std::nullopt;
}

bool implies(const Constraint& c, const Constraint& d) {
  if (c.contradictory) return true;
  if (d.contradictory) return !is_sat(c);
  for (const Atom& a : d.atoms)
    for (const Atom& nb : a.negation())
      if (atoms_sat_with(c.atoms, nb)) return false;
  return true;
}

namespace {

// c ∧ ¬d1 ∧ ... ∧ ¬dn unsat?  Expands one negated disjunct at a time with
// eager pruning, so the DNF cross-product is never materialized.
bool conj_negations_unsat(const Constraint& c,
                          std::span<const Constraint> negated) {
  if (!is_sat(c)) return true;
  if (negated.empty()) return false;
  const Constraint& d = negated.front();
  auto rest = negated.subspan(1);
  if (d.contradictory) return conj_negations_unsat(c, rest);  // ¬false = true
  if (d.is_true()) return true;                               // ¬true = false
  for (const Atom& a : d.atoms)
    for (const Atom& nb : a.negation())
      if (!conj_negations_unsat(c.conjoin(nb), rest)) return false;
  return true;
}

}  // namespace

bool implies(const Constraint& c, const Formula& f) {
  for (const Constraint& d : f.disjuncts)
    if (implies(c, d)) return true;  // cheap sufficient check
  return conj_negations_unsat(c, std::span(f.disjuncts));
}

bool implies(const Formula& f, const Formula& g) {
  return std::all_of(f.disjuncts.begin(), f.disjuncts.end(),
                     [&](const Constraint& d) { return implies(d, g); });
}

bool equivalent(const Constraint& c, const Constraint& d) {
  return implies(c, d) && implies(d, c);
}

bool equivalent(const Formula& f, const Formula& g) {
  return implies(f, g) && implies(g, f);
}

Formula negate(const Constraint& c) {
  if (c.contradictory) return Formula::truth();
  Formula out;
  for (const Atom& a : c.atoms) {
    for (const Atom& nb : a.negation()) {
      Constraint d;
      d.add(nb);
      if (d.contradictory) continue;
      if (std::find(out.disjuncts.begin(), out.disjuncts.end(), d) ==
          out.disjuncts.end())
        out.disjuncts.push_back(std::move(d));
    }
  }
  return out;  // empty (= FALSE) when c is TRUE
}

Formula negate(const Formula& f) {
  Formula acc = Formula::truth();
  for (const Constraint& d : f.disjuncts) acc = conjoin(acc, negate(d));
  return acc;
}

Formula conjoin(const Formula& f, const Formula& g) {
  Formula out;
  for (const Constraint& a : f.disjuncts)
    for (const Constraint& b : g.disjuncts) {
      Constraint c = simplify(a.conjoin(b));
      if (c.contradictory) continue;
      if (std::find(out.disjuncts.begin(), out.disjuncts.end(), c) ==
          out.disjuncts.end())
        out.disjuncts.push_back(std::move(c));
    }
  return out;
}

Formula conjoin(const Formula& f, const Constraint& c) {
  return conjoin(f, Formula::of(c));
}

Formula disjoin(Formula f, const Formula& g) {
  for (const Constraint& d : g.disjuncts)
    if (std::find(f.disjuncts.begin(), f.disjuncts.end(), d) ==
        f.disjuncts.end())
      f.disjuncts.push_back(d);
  return f;
}

Formula simplify(const Formula& f) {
  Formula out;
  for (const Constraint& d : f.disjuncts) {
    Constraint s = simplify(d);
    if (s.contradictory || !is_sat(s)) continue;
    if (std::find(out.disjuncts.begin(), out.disjuncts.end(), s) ==
        out.disjuncts.end())
      out.disjuncts.push_back(std::move(s));
  }
  // Absorb disjuncts implied by another (keep the weakest representative).
  std::vector<bool> dead(out.disjuncts.size(), false);
  for (size_t i = 0; i < out.disjuncts.size(); ++i) {
    for (size_t j = 0; j < out.disjuncts.size(); ++j) {
      if (i == j || dead[j]) continue;
      if (!implies(out.disjuncts[i], out.disjuncts[j])) continue;
      // On mutual implication keep the earlier one.
      if (implies(out.disjuncts[j], out.disjuncts[i]) && j > i) continue;
      dead[i] = true;
      break;
    }
  }
  Formula pruned;
  for (size_t i = 0; i < out.disjuncts.size(); ++i)
    if (!dead[i]) pruned.disjuncts.push_back(std::move(out.disjuncts[i]));
  return pruned;
}

// ---------------------------------------------------------------------------
// Printing

static void print_term(std::ostringstream& os, bool first, const Rat& coeff,
                       const VarId& v) {
  Rat c = coeff;
  if (!first) {
    os << (c < 0 ? " - " : " + ");
    c = mp::abs(c);
  } else if (c < 0) {
    os << "-";
    c = mp::abs(c);
  }
  if (c != 1) os << show(c) << "*";
  os << show(v);
}

std::string show(const LinExpr& e) {
  if (e.terms.empty()) return show(e.constant);
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, c] : e.terms) {
    print_term(os, first, c, v);
    first = false;
  }
  if (e.constant != 0) {
    Rat k = e.constant;
    os << (k < 0 ? " - " : " + ") << show(Rat(mp::abs(k)));
  }
  return os.str();
}

std::string show(const Atom& a) {
  // Render `lhs rel 0` as `positive-part rel negative-part` for readability.
  LinExpr left, right;
  for (const auto& [v, c] : a.lhs.terms) {
    if (c > 0)
      left.terms.emplace(v, c);
    else
      right.terms.emplace(v, -c);
  }
  if (a.lhs.constant > 0)
    left.constant = a.lhs.constant;
  else
    right.constant = -a.lhs.constant;
  const char* rel = a.rel == Rel::LT ? " < " : a.rel == Rel::LE ? " <= " : " = ";
  return show(left) + rel + show(right);
}

std::string show(const Constraint& c) {
  if (c.contradictory) return "false";
  if (c.atoms.empty()) return "true";
  std::string out;
  for (size_t i = 0; i < c.atoms.size(); ++i) {
    if (i) out += " and ";
    out += show(c.atoms[i]);
  }
  return out;
}

std::string show(const Formula& f) {
  if (f.disjuncts.empty()) return "false";
  std::string out;
  for (size_t i = 0; i < f.disjuncts.size(); ++i) {
    if (i) out += " or ";
    out += show(f.disjuncts[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Lexer {
  std::string_view s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }
  bool done() {
    skip_ws();
    return pos == s.size();
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("at offset " + std::to_string(pos) + " in '" +
                     std::string(s) + "': " + why);
  }
  bool peek_sym(std::string_view sym) {
    skip_ws();
    return s.substr(pos, sym.size()) == sym;
  }
  bool eat_sym(std::string_view sym) {
    if (!peek_sym(sym)) return false;
    pos += sym.size();
    return true;
  }
  std::optional<std::string> peek_ident() {
    skip_ws();
    size_t i = pos;
    if (i >= s.size()) return std::nullopt;
    if (!std::isalpha(static_cast<unsigned char>(s[i])) && s[i] != '_')
      return std::nullopt;
    size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                            s[i] == '_'))
      ++i;
    return std::string(s.substr(start, i - start));
  }
  std::string eat_ident() {
    auto id = peek_ident();
    if (!id) fail("identifier expected");
    pos += id->size();
    return *id;
  }
  bool peek_number() {
    skip_ws();
    return pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]));
  }
  Rat eat_number() {
    skip_ws();
    size_t start = pos;
    auto digits = [&] {
      while (pos < s.size() &&
             std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
    };
    digits();
    if (pos == start) fail("number expected");
    if (pos < s.size() && (s[pos] == '/' || s[pos] == '.')) {
      ++pos;
      size_t fs = pos;
      digits();
      if (pos == fs) fail("digits expected after '" +
                          std::string(1, s[pos - 1]) + "'");
    }
    return parse_rat(s.substr(start, pos - start));
  }
};

VarId resolve(Lexer& lx, const std::string& name, const SymbolTable* table) {
  if (table) {
    auto it = table->find(name);
    if (it != table->end()) return it->second;
  }
  if (name == "time") return time_now_var();
  if (table) lx.fail("unknown identifier '" + name + "'");
  return time_param(name);
}

LinExpr parse_linexpr_body(Lexer& lx, const SymbolTable* table) {
  LinExpr out;
  bool first = true;
  for (;;) {
    lx.skip_ws();
    Rat sign(1);
    if (lx.eat_sym("-"))
      sign = -1;
    else if (lx.eat_sym("+"))
      sign = 1;
    else if (!first)
      break;
    // term: NUMBER [* var] | var
    if (lx.peek_number()) {
      Rat k = lx.eat_number();
      if (lx.eat_sym("*")) {
        auto name = lx.peek_ident();
        std::string id;
        if (name && (*name == "now" || *name == "clock")) {
          lx.eat_ident();
          if (!lx.eat_sym("(")) lx.fail("'(' expected after " + *name);
          id = lx.eat_ident();
          if (!lx.eat_sym(")")) lx.fail("')' expected");
          out += LinExpr::var(*name == "now" ? now_var(id) : clock_var(id),
                              sign * k);
        } else {
          out += LinExpr::var(resolve(lx, lx.eat_ident(), table), sign * k);
        }
      } else {
        out += LinExpr(sign * k);
      }
    } else {
      auto name = lx.peek_ident();
      if (!name) {
        if (first) lx.fail("expression expected");
        break;
      }
      lx.eat_ident();
      if ((*name == "now" || *name == "clock") && lx.eat_sym("(")) {
        std::string id = lx.eat_ident();
        if (!lx.eat_sym(")")) lx.fail("')' expected");
        out += LinExpr::var(*name == "now" ? now_var(id) : clock_var(id), sign);
      } else {
        out += LinExpr::var(resolve(lx, *name, table), sign);
      }
    }
    first = false;
  }
  return out;
}

Atom parse_atom_body(Lexer& lx, const SymbolTable* table) {
  LinExpr a = parse_linexpr_body(lx, table);
  Rel rel;
  bool flip = false;
  if (lx.eat_sym("<="))
    rel = Rel::LE;
  else if (lx.eat_sym(">=")) {
    rel = Rel::LE;
    flip = true;
  } else if (lx.eat_sym("<"))
    rel = Rel::LT;
  else if (lx.eat_sym(">")) {
    rel = Rel::LT;
    flip = true;
  } else if (lx.eat_sym("="))
    rel = Rel::EQ;
  else
    lx.fail("relation expected");
  LinExpr b = parse_linexpr_body(lx, table);
  return flip ? Atom(std::move(b) - std::move(a), rel)
              : Atom(std::move(a) - std::move(b), rel);
}

Constraint parse_constraint_body(Lexer& lx, const SymbolTable* table) {
  lx.skip_ws();
  if (auto id = lx.peek_ident()) {
    if (*id == "true") {
      lx.eat_ident();
      return Constraint::truth();
    }
    if (*id == "false") {
      lx.eat_ident();
      return Constraint::falsity();
    }
  }
  Constraint c;
  for (;;) {
    c.add(parse_atom_body(lx, table));
    lx.skip_ws();
    auto id = lx.peek_ident();
    if (!id || *id != "and") break;
    lx.eat_ident();
  }
  return c;
}

}  // namespace

LinExpr parse_linexpr(std::string_view text, const SymbolTable* table) {
  Lexer lx{text};
  LinExpr e = parse_linexpr_body(lx, table);
  if (!lx.done()) lx.fail("trailing input");
  return e;
}

Atom parse_atom(std::string_view text, const SymbolTable* table) {
  Lexer lx{text};
  Atom a = parse_atom_body(lx, table);
  if (!lx.done()) lx.fail("trailing input");
  return a;
}

Constraint parse_constraint(std::string_view text, const SymbolTable* table) {
  Lexer lx{text};
  Constraint c = parse_constraint_body(lx, table);
  if (!lx.done()) lx.fail("trailing input");
  return c;
}

Formula parse_formula(std::string_view text, const SymbolTable* table) {
  Lexer lx{text};
  Formula f;
  for (;;) {
    f.disjuncts.push_back(parse_constraint_body(lx, table));
    lx.skip_ws();
    auto id = lx.peek_ident();
    if (!id || *id != "or") break;
    lx.eat_ident();
  }
  if (!lx.done()) lx.fail("trailing input");
  // A lone `false` disjunct means FALSE, not a one-disjunct formula.
  std::erase_if(f.disjuncts,
                [](const Constraint& c) { return c.contradictory; });
  return f;
}

}  // namespace tempo
