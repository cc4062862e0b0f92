// Exact linear arithmetic over the rationals: expressions, conjunctive
// constraints, DNF formulas, and quantifier elimination by Fourier-Motzkin.
// This is the whole deductive core of the tool -- satisfiability, implication
// and projection of every symbolic state go through eliminate()/is_sat().
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tempo {

// Plain value semantics (no expression templates) keeps these safe to stick
// into standard containers and auto-typed code.
using Int = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                          boost::multiprecision::et_off>;
using Rat = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<
        boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

// "n", "-n/m" or "n.ddd" -> exact rational. Throws ParseError.
Rat parse_rat(std::string_view text);
std::string show(const Rat& r);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Variables

enum class VarKind : std::uint8_t {
  TimeParam,   // user-declared rational-valued parameter
  MarkParam,   // user-declared integer-valued marking parameter (relaxed to
               // rationals by the solver; see README)
  Clock,       // canonical "current clock of transition <name>" variable
  Delta,       // fresh delay variable, one per symbolic tick (instance = #)
  GlobalTime,  // canonical "time now" variable
  Now,         // canonical "current marking of place <name>" variable
};

struct VarId {
  VarKind kind;
  std::string name;
  int instance = 0;  // 0 for user-declared; fresh generators count up

  auto operator<=>(const VarId&) const = default;
};

inline VarId time_param(std::string name) {
  return {VarKind::TimeParam, std::move(name), 0};
}
inline VarId mark_param(std::string name) {
  return {VarKind::MarkParam, std::move(name), 0};
}
inline VarId delta_var(int instance) { return {VarKind::Delta, "", instance}; }
inline VarId clock_var(std::string trans) {
  return {VarKind::Clock, std::move(trans), 0};
}
inline VarId now_var(std::string place) {
  return {VarKind::Now, std::move(place), 0};
}
inline VarId time_now_var() { return {VarKind::GlobalTime, "", 0}; }

inline bool is_param(const VarId& v) {
  return v.kind == VarKind::TimeParam || v.kind == VarKind::MarkParam;
}

std::string show(const VarId& v);

// ---------------------------------------------------------------------------
// Linear expressions: constant + sum of coeff*var, exact coefficients.

struct LinExpr {
  Rat constant{};
  std::map<VarId, Rat> terms;  // nonzero coefficients only

  LinExpr() = default;
  explicit LinExpr(Rat k) : constant(std::move(k)) {}
  explicit LinExpr(long long k) : constant(k) {}
  static LinExpr var(VarId v, Rat coeff = Rat(1));

  bool is_constant() const { return terms.empty(); }
  bool is_zero() const { return terms.empty() && constant == 0; }
  Rat coeff(const VarId& v) const;

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(const Rat& k);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(const Rat& k, LinExpr e) { return e *= k; }
  friend LinExpr operator-(LinExpr a) { return a *= Rat(-1); }

  // Replace v by e everywhere.
  LinExpr subst(const VarId& v, const LinExpr& e) const;
  // Exact value under a total assignment; throws EvalError on a missing var.
  Rat eval(const std::map<VarId, Rat>& point) const;

  bool operator==(const LinExpr&) const = default;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Atoms: lhs REL 0.  Construction normalizes to integer coefficients with
// gcd 1 (positive scaling, so semantics are unchanged); equalities are also
// sign-normalized so syntactic duplicates collapse.

enum class Rel : std::uint8_t { LT, LE, EQ };

struct Atom {
  LinExpr lhs;
  Rel rel;

  Atom(LinExpr e, Rel r);

  // Constant-only atoms decide themselves.
  bool is_constant() const { return lhs.is_constant(); }
  std::optional<bool> constant_value() const;

  bool holds_at(const std::map<VarId, Rat>& point) const;

  // The negation as a disjunction of atoms (one for LT/LE, two for EQ).
  std::vector<Atom> negation() const;

  bool operator==(const Atom&) const = default;
};

bool atom_less(const Atom& a, const Atom& b);

// Convenience builders: (a REL b) as an Atom over lhs = a - b.
Atom make_atom(LinExpr a, Rel rel, LinExpr b);

// ---------------------------------------------------------------------------
// Constraint: conjunction of atoms.  TRUE = empty, FALSE = contradictory flag.

struct Constraint {
  bool contradictory = false;
  std::vector<Atom> atoms;  // set semantics; kept sorted by atom_less

  static Constraint truth() { return {}; }
  static Constraint falsity() {
    Constraint c;
    c.contradictory = true;
    return c;
  }

  bool is_true() const { return !contradictory && atoms.empty(); }
  bool is_false_literal() const { return contradictory; }

  // Conjoin one atom; constant atoms fold away, duplicates are dropped.
  void add(Atom a);
  Constraint conjoin(const Constraint& o) const;
  Constraint conjoin(Atom a) const;

  std::set<VarId> vars() const;
  bool holds_at(const std::map<VarId, Rat>& point) const;

  bool operator==(const Constraint&) const = default;
};

// Disjunction of constraints (DNF).  Empty list = FALSE.
struct Formula {
  std::vector<Constraint> disjuncts;

  static Formula falsity() { return {}; }
  static Formula truth() { return of(Constraint::truth()); }
  static Formula of(Constraint c) { return {{std::move(c)}}; }

  bool is_false_syntactic() const { return disjuncts.empty(); }
  bool holds_at(const std::map<VarId, Rat>& point) const;

  bool operator==(const Formula&) const = default;
};

// ---------------------------------------------------------------------------
// Decision procedures (exact; integer-kinded variables relaxed to rationals).

bool is_sat(const Constraint& c);
bool is_sat(const Formula& f);

// Equivalent constraint with duplicate/implied/constant atoms removed.
Constraint simplify(const Constraint& c);
// Drops unsatisfiable disjuncts and simplifies the rest.
Formula simplify(const Formula& f);

// ∃ vars. c as a constraint over the remaining variables (exact projection).
// Equalities are eliminated by substitution; the fewest-occurrences variable
// goes first; each elimination step is followed by a simplify pass.
Constraint eliminate(const std::set<VarId>& vars, const Constraint& c);
Formula eliminate(const std::set<VarId>& vars, const Formula& f);

// Keep only variables satisfying `keep`; eliminate everything else.
Constraint project(const Constraint& c,
                   const std::function<bool(const VarId&)>& keep);

// A rational point satisfying the input, or nullopt when unsatisfiable.
// Deterministic: eliminates variables one at a time, then back-substitutes,
// picking interval midpoints (one past a lone strict bound, 0 when a variable
// is unconstrained). Variables that do not occur in the input are absent from
// the point.
std::optional<std::map<VarId, Rat>> sample_model(const Constraint& c);
std::optional<std::map<VarId, Rat>> sample_model(const Formula& f);

bool implies(const Constraint& c, const Constraint& d);
bool implies(const Constraint& c, const Formula& f);
bool implies(const Formula& f, const Formula& g);
bool equivalent(const Constraint& c, const Constraint& d);
bool equivalent(const Formula& f, const Formula& g);

// ¬f in DNF (De Morgan + atom negation cross-product, unsat disjuncts pruned).
Formula negate(const Constraint& c);
Formula negate(const Formula& f);

// f ∧ g in DNF (cross-product, unsat disjuncts pruned).
Formula conjoin(const Formula& f, const Formula& g);
Formula conjoin(const Formula& f, const Constraint& c);
// f ∨ g.
Formula disjoin(Formula f, const Formula& g);

// ---------------------------------------------------------------------------
// Text syntax.  Expressions: `2*a + 1/2`; relations `< <= = >= >`; atoms
// chain with `and` into constraints, constraints with `or` into formulas.
// `now(p)`, `clock(t)` and `time` name the canonical state variables; every
// other identifier resolves through the symbol table (defaulting to a time
// parameter when absent).

using SymbolTable = std::map<std::string, VarId, std::less<>>;

LinExpr parse_linexpr(std::string_view text, const SymbolTable* table = nullptr);
Atom parse_atom(std::string_view text, const SymbolTable* table = nullptr);
Constraint parse_constraint(std::string_view text,
                            const SymbolTable* table = nullptr);
Formula parse_formula(std::string_view text, const SymbolTable* table = nullptr);

std::string show(const LinExpr& e);
std::string show(const Atom& a);
std::string show(const Constraint& c);
std::string show(const Formula& f);

}  // namespace tempo
