// Shared helpers for the test suites: deterministic RNG, random constraint
// systems, and a deliberately naive satisfiability decision used as an
// independent oracle for the production Fourier-Motzkin engine.
#pragma once

#include <random>
#include <vector>

#include "tempo/linarith.hpp"

namespace tempo::testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline int uniform(std::mt19937_64& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline Rat random_rat(std::mt19937_64& g, int max_num = 9, int max_den = 4) {
  return Rat(uniform(g, -max_num, max_num), uniform(g, 1, max_den));
}

inline std::vector<VarId> test_vars(int n) {
  std::vector<VarId> vs;
  for (int i = 0; i < n; ++i) vs.push_back(time_param("x" + std::to_string(i)));
  return vs;
}

// Random conjunction over the given variables; equalities kept rare so most
// systems stay satisfiable.
inline Constraint random_system(std::mt19937_64& g,
                                const std::vector<VarId>& vars, int max_atoms) {
  Constraint c;
  int n = uniform(g, 1, max_atoms);
  for (int i = 0; i < n; ++i) {
    LinExpr e(Rat(uniform(g, -6, 6)));
    int width = uniform(g, 1, std::min<int>(3, static_cast<int>(vars.size())));
    for (int k = 0; k < width; ++k) {
      int coeff = uniform(g, -3, 3);
      if (coeff == 0) coeff = 1;
      e += LinExpr::var(vars[uniform(g, 0, static_cast<int>(vars.size()) - 1)],
                        Rat(coeff));
    }
    Rel rel = uniform(g, 0, 5) == 0 ? Rel::EQ
              : uniform(g, 0, 1)    ? Rel::LT
                                    : Rel::LE;
    c.add(Atom(std::move(e), rel));
  }
  return c;
}

// Textbook Fourier-Motzkin satisfiability with none of the production
// engine's refinements: no equality substitution (equalities split into two
// inequalities), no elimination-order heuristic, no simplification.  Slow and
// simple on purpose.
inline bool naive_sat(const Constraint& c) {
  if (c.contradictory) return false;
  std::vector<Atom> atoms;
  for (const Atom& a : c.atoms) {
    if (a.rel == Rel::EQ) {
      atoms.emplace_back(LinExpr(a.lhs), Rel::LE);
      atoms.emplace_back(-LinExpr(a.lhs), Rel::LE);
    } else {
      atoms.push_back(a);
    }
  }
  for (;;) {
    std::vector<Atom> pending;
    for (const Atom& a : atoms) {
      if (auto v = a.constant_value()) {
        if (!*v) return false;
      } else {
        pending.push_back(a);
      }
    }
    if (pending.empty()) return true;
    VarId v = pending.front().lhs.terms.begin()->first;
    std::vector<Atom> uppers, lowers, rest;
    for (const Atom& a : pending) {
      Rat c0 = a.lhs.coeff(v);
      if (c0 == 0)
        rest.push_back(a);
      else if (c0 > 0)
        uppers.push_back(a);
      else
        lowers.push_back(a);
    }
    for (const Atom& up : uppers)
      for (const Atom& lo : lowers) {
        LinExpr comb = (-lo.lhs.coeff(v)) * LinExpr(up.lhs) +
                       up.lhs.coeff(v) * LinExpr(lo.lhs);
        Rel r = (up.rel == Rel::LT || lo.rel == Rel::LT) ? Rel::LT : Rel::LE;
        rest.emplace_back(std::move(comb), r);
      }
    atoms = std::move(rest);
  }
}

// Ground the listed variables in c at the given point.
inline Constraint bind_point(const Constraint& c,
                             const std::map<VarId, Rat>& point) {
  if (c.contradictory) return Constraint::falsity();
  Constraint out;
  for (const Atom& a : c.atoms) {
    LinExpr e = a.lhs;
    for (const auto& [v, val] : point) e = e.subst(v, LinExpr(val));
    out.add(Atom(std::move(e), a.rel));
    if (out.contradictory) break;
  }
  return out;
}

}  // namespace tempo::testutil
