#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "liefrw/expr.hpp"

namespace liefrw::detail {

// A monomial is a product of atoms (variables, opaque function applications,
// logarithms) raised to nonzero integer powers, times at most one exp factor.
struct Monomial {
  std::vector<std::pair<Expr, int>> factors;  // ascending atom order
  std::optional<Expr> exp_arg;                // normalized and nonzero

  int degree() const;
  bool is_one() const { return factors.empty() && !exp_arg; }
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Graded lexicographic order; "less" means leading.
std::strong_ordering grlex(const Monomial& lhs, const Monomial& rhs);

struct MonomialOrder {
  bool operator()(const Monomial& lhs, const Monomial& rhs) const { return grlex(lhs, rhs) < 0; }
};

using Poly = std::map<Monomial, Rational, MonomialOrder>;

// num / prod(den[i].first ^ den[i].second). Every denominator factor is
// primitive: leading coefficient one, no monomial content, not a monomial.
struct RatFunc {
  Poly num;
  std::vector<std::pair<Poly, int>> den;

  bool is_zero() const { return num.empty(); }
};

RatFunc rf_constant(const Rational& q);
RatFunc rf_atom(const Expr& atom);
RatFunc rf_add(const RatFunc& lhs, const RatFunc& rhs);
RatFunc rf_mul(const RatFunc& lhs, const RatFunc& rhs);
RatFunc rf_scale(const RatFunc& r, const Rational& q);
RatFunc rf_inv(const RatFunc& r);
RatFunc rf_pow(const RatFunc& r, int n);
RatFunc rf_exp(const RatFunc& r);
RatFunc rf_log(const RatFunc& r);
RatFunc rf_diff(const RatFunc& r, Symbol v);

RatFunc to_canon(const Expr& e, const Binding* binding = nullptr);
Expr to_expr(const RatFunc& r);
Expr monomial_expr(const Monomial& m);

Poly poly_mul(const Poly& lhs, const Poly& rhs);
std::optional<Poly> poly_exact_div(const Poly& num, const Poly& den);

}  // namespace liefrw::detail
