#pragma once

#include <string>
#include <vector>

#include "liefrw/expr.hpp"
#include "liefrw/jet.hpp"

namespace liefrw {

/// Shared coordinates of every FRW model: time t, scale factor a, scalar
/// field phi, lapse N and the opaque potential V(phi), with their jets.
struct FrwSymbols {
  Symbol t, a, phi, N;
  Symbol adot, addot, phidot, phiddot, Ndot, Nddot;
  FunctionRef V;
};
const FrwSymbols& frw_symbols();

/// Jet context over t for (a, phi) or, with the lapse, (a, phi, N).
JetContext frw_context(bool with_lapse = false);

class Potential {
 public:
  enum class Kind { Opaque, Exponential, Constant, Polynomial };

  /// The declared opaque V(phi).
  static Potential opaque();
  /// c * exp(lambda * phi); `c` may be symbolic.
  static Potential exponential(Expr c, Rational lambda);
  static Potential constant(Rational v0);
  /// sum coeffs[i] * phi^i.
  static Potential polynomial(std::vector<Rational> coeffs);

  Kind kind() const { return kind_; }
  /// V evaluated at `x`.
  Expr at(const Expr& x) const;
  /// n-th derivative of V evaluated at `x`.
  Expr derivative(const Expr& x, int n = 1) const;
  Expr in_phi() const { return at(Expr(frw_symbols().phi)); }
  bool is_opaque() const { return kind_ == Kind::Opaque; }
  /// Short description such as "V = exp(-2*phi)" used in side conditions.
  std::string describe() const;

  const Expr& scale() const { return scale_; }
  const Rational& rate() const { return rate_; }
  const std::vector<Rational>& coefficients() const { return coefficients_; }

 private:
  Kind kind_ = Kind::Opaque;
  Expr scale_ = Expr(1);
  Rational rate_ = 0;
  std::vector<Rational> coefficients_;
};

enum class LapseMode { Unit, Dynamical };

struct ModelConfig {
  int k = 0;
  Potential potential = Potential::opaque();
  LapseMode lapse = LapseMode::Unit;

  /// Throws ConfigError unless k is -1, 0 or 1.
  void validate() const;
};

/// leading = rhs, with `leading` the top jet coordinate of `dependent`.
struct SolvedEquation {
  Symbol dependent;
  Symbol leading;
  Expr rhs;
  std::string label;

  Expr residual() const { return normalize(Expr(leading) - rhs); }
};

struct ODESystem {
  std::string name;
  JetContext context;
  std::vector<SolvedEquation> equations;
  std::vector<Expr> constraints;
  std::vector<std::string> side_conditions;
  /// Dependents without an evolution equation (gauge freedom).
  std::vector<Symbol> free_dependents;

  /// Substitution of every leading coordinate by its right side.
  Binding on_shell() const;
  Expr on_shell(const Expr& e) const { return substitute(e, on_shell()); }
  const SolvedEquation& equation_for(Symbol dependent) const;
};

/// ddot a = 2aV - 2a phidot^2 and the Klein-Gordon equation, with the
/// constraint E + k = 0 attached.
ODESystem frw_system(const ModelConfig& cfg);
/// Euler-Lagrange pair of the proper-time Lagrangian; no constraint.
ODESystem frw_proper_time_system(const ModelConfig& cfg);
/// System with dynamical lapse N (no equation for N); constraint attached.
ODESystem frw_lapse_system(const ModelConfig& cfg);

/// E = adot^2 - 2a^2 V - a^2 phidot^2.
Expr frw_energy(const Potential& potential);

struct Lagrangian {
  JetContext context;
  Expr L;
};

/// Proper-time Lagrangian for unit lapse, the N-dependent one otherwise.
Lagrangian lagrangian(const ModelConfig& cfg);

/// dL/du - D_t(dL/du_t), normalized and not rescaled.
Expr euler_lagrange(const Lagrangian& L, Symbol u);

/// Solves `e` = 0 for `leading`, which must occur linearly. Throws
/// NotPolynomial otherwise.
SolvedEquation solve_for_leading(const Expr& e, Symbol dependent, Symbol leading, std::string label);

}  // namespace liefrw
