#pragma once

#include <map>
#include <optional>
#include <vector>

#include "liefrw/expr.hpp"

namespace liefrw {

/// Jet space over one independent variable. Jet coordinates are registered
/// variables D(u,t,k) for k = 1..order.
class JetContext {
 public:
  JetContext(Symbol independent, std::vector<Symbol> dependents, int order = 2);

  Symbol independent() const { return independent_; }
  const std::vector<Symbol>& dependents() const { return dependents_; }
  int order() const { return order_; }

  /// k-th derivative coordinate of `u`; k = 0 gives `u` itself.
  Symbol jet(Symbol u, int k) const;
  /// Jet order of `s` (0 for base variables) or nullopt if `s` is foreign.
  std::optional<int> jet_order(Symbol s) const;
  /// Dependent whose jet chain contains `s`.
  std::optional<Symbol> dependent_of(Symbol s) const;
  bool is_dependent(Symbol s) const;

  /// t followed by the dependents.
  std::vector<Symbol> base_variables() const;
  /// Every coordinate of order 1..k, grouped by order.
  std::vector<Symbol> jet_variables(int k) const;
  /// Highest jet order occurring in `e` (0 when only base variables occur).
  int max_order(const Expr& e) const;

  friend bool operator==(const JetContext& lhs, const JetContext& rhs) {
    return lhs.independent_ == rhs.independent_ && lhs.dependents_ == rhs.dependents_ && lhs.order_ == rhs.order_;
  }

 private:
  Symbol independent_;
  std::vector<Symbol> dependents_;
  int order_;
};

/// D_t e = de/dt + sum over u and k of u_{k+1} de/du_k. Throws OrderOverflow
/// when `e` already contains top-order coordinates.
Expr total_derivative(const Expr& e, const JetContext& ctx);

/// Point vector field tau d/dt + sum xi_u d/du with coefficients free of jet
/// coordinates.
class VectorField {
 public:
  explicit VectorField(JetContext context, std::map<Symbol, Expr> coefficients = {});

  const JetContext& context() const { return context_; }
  /// Zero when absent.
  Expr coefficient(Symbol s) const;
  Expr tau() const { return coefficient(context_.independent()); }
  const std::map<Symbol, Expr>& coefficients() const { return coefficients_; }

  /// Action on a function of the base variables.
  Expr apply_base(const Expr& e) const;
  bool is_zero() const;

  friend VectorField operator+(const VectorField& lhs, const VectorField& rhs);
  friend VectorField operator-(const VectorField& lhs, const VectorField& rhs);
  friend VectorField operator*(const Expr& scale, const VectorField& v);

 private:
  JetContext context_;
  std::map<Symbol, Expr> coefficients_;  // normalized, nonzero entries only
};

/// Structural equality of the normalized coefficients.
bool operator==(const VectorField& lhs, const VectorField& rhs);
std::string render(const VectorField& v);

class ProlongedField {
 public:
  ProlongedField(VectorField base, int order, std::map<Symbol, Expr> extended);

  const VectorField& base() const { return base_; }
  int order() const { return order_; }
  /// Coefficient of any base or jet coordinate up to the prolongation order.
  Expr coefficient(Symbol s) const;
  const std::map<Symbol, Expr>& extended() const { return extended_; }

 private:
  VectorField base_;
  int order_;
  std::map<Symbol, Expr> extended_;
};

/// Extended coefficients by eta_k = D_t(eta_{k-1}) - D_t(tau) u_k.
ProlongedField prolong(const VectorField& v, int order);

/// Sum of coefficient times partial derivative over base and jet coordinates.
/// Throws OrderOverflow if `e` involves coordinates above the prolongation order.
Expr apply(const ProlongedField& pf, const Expr& e);

}  // namespace liefrw
