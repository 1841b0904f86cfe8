#pragma once

#include <string>
#include <vector>

#include "liefrw/expr.hpp"
#include "liefrw/jet.hpp"
#include "liefrw/models.hpp"

namespace liefrw {

/// X = t d/dt + d/dphi, Y = d/dt, Z = a d/da and W = X + Y on `ctx`.
VectorField generator_X(const JetContext& ctx);
VectorField generator_Y(const JetContext& ctx);
VectorField generator_Z(const JetContext& ctx);
VectorField generator_W(const JetContext& ctx);
/// X, Y, Z or W by name; throws ConfigError for anything else.
VectorField named_generator(const std::string& name, const JetContext& ctx);

/// G = (mu t + c2) d/dt + c1 a d/da + mu d/dphi.
struct GeneratorFamily {
  Expr c1, c2, mu;

  /// Family with fresh symbolic parameters c1, c2, mu.
  static GeneratorFamily symbolic();
  VectorField field(const JetContext& ctx) const;
};

struct Residual {
  std::string label;
  Expr off_shell;
  Expr on_shell;  // for constraints: remainder modulo the constraint itself
  bool zero = false;
};

struct SymmetryReport {
  std::string generator;
  std::string system;
  std::vector<Residual> equations;
  std::vector<Residual> constraints;
  std::vector<std::string> side_conditions;
  /// True iff every evolution-equation residual vanishes on-shell.
  bool verdict = false;
  /// True iff every constraint is mapped into its own ideal.
  bool constraints_preserved = false;

  std::string to_text() const;
  std::string to_key_values() const;
};

/// pr2(g)(leading - rhs) for every equation, with all leading coordinates
/// replaced by their right sides. Throws ContextMismatch.
SymmetryReport symmetry_residual(const VectorField& g, const ODESystem& sys, const std::string& generator_name = "G");

/// Same on-shell residual computed by eliminating second derivatives one
/// equation at a time in the given order.
Expr sequential_on_shell_residual(const VectorField& g, const ODESystem& sys, std::size_t equation,
                                  const std::vector<std::size_t>& elimination_order);

struct DeterminingEquations {
  /// Ansatz field with opaque coefficient functions of the base variables.
  VectorField ansatz;
  /// First-order jet coordinates used as collection variables.
  std::vector<Symbol> jet_variables;
  struct Block {
    std::string label;
    Expr condition;  // expanded on-shell symmetry condition
    Collected coefficients;
  };
  std::vector<Block> blocks;

  /// Every coefficient after substituting the ansatz functions.
  std::vector<Expr> substituted(const Binding& solution) const;
};

/// Ansatz tau, A, Phi over (t, a, phi); with the lapse the functions are
/// tauN, AN, PhiN, XiN over (t, a, phi, N).
VectorField ansatz_field(const JetContext& ctx);
DeterminingEquations determining_equations(const ODESystem& sys);

/// [g1, g2] with coefficients g1(xi2) - g2(xi1).
VectorField commutator(const VectorField& g1, const VectorField& g2);

struct AlgebraStructure {
  std::vector<std::string> names;
  std::vector<VectorField> basis;
  /// constants[i][j][k]: [e_i, e_j] = sum_k constants[i][j][k] e_k.
  std::vector<std::vector<std::vector<Rational>>> constants;
  std::vector<std::size_t> derived_series;        // dimensions
  std::vector<std::size_t> lower_central_series;  // dimensions
  bool solvable = false;
  bool nilpotent = false;
  bool abelian = false;

  std::string commutator_table() const;
};

/// Throws NotLinearlyIndependent or NotClosed.
AlgebraStructure classify(const std::vector<VectorField>& basis, std::vector<std::string> names = {});

/// pr1(g)(e) for a first-order scalar e.
Expr lie_action_on_scalar(const VectorField& g, const Expr& e);

}  // namespace liefrw
