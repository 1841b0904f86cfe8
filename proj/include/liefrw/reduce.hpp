#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "liefrw/integrate.hpp"
#include "liefrw/models.hpp"

namespace liefrw {

/// Invariants of the {Y, Z} subgroup: x = phi, y = phidot, w = adot / a.
struct ReducedState {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
};

/// Throws NonPositiveScaleFactor unless a > 0.
ReducedState to_invariants(const State& s);

enum class ReducedVariant { Conformal, Proper };
std::string to_string(ReducedVariant v);

/// Symbols x, y, w and the jet context over x (order 1).
struct ReducedSymbols {
  Symbol x, y, w;
};
const ReducedSymbols& reduced_symbols();
JetContext reduced_context();

struct ReducedSystem {
  ReducedVariant variant = ReducedVariant::Conformal;
  Potential potential;
  Expr dy_dx;
  Expr dw_dx;
  /// Power p with a^p (w^2 - 2V - y^2) conserved along the flow.
  int conserved_power = 2;
};

/// Conformal right sides are written down directly; the proper variant
/// (k = 0) is obtained by substituting the invariants into its equations.
ReducedSystem reduced_system(const Potential& pot, ReducedVariant variant);

/// Substitutes phi = x, phidot = y, adot = w a, phiddot = y y', addot =
/// a (y w' + w^2) into both equations of `sys` and solves for (y', w').
/// Throws NotPolynomial when a does not drop out.
std::pair<Expr, Expr> invariant_substitution(const ODESystem& sys);

/// w^2 - 2V(x) - y^2.
Expr reduced_conserved(const Potential& pot);

/// d/dx [a^p (w^2 - 2V - y^2)] along the reduced flow with da/dx = a w / y,
/// divided by a^p and normalized; zero when the quantity is conserved.
Expr reduced_conservation_defect(const ReducedSystem& rsys);

struct ReconstructOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  /// Uniform grid in x, endpoints included.
  std::size_t samples = 101;
  std::map<FunctionRef, NumericFunction> functions;
};

/// Reduced solution with the quadratures t(x) and a(x).
struct ReducedTrajectory {
  std::vector<double> x, y, w, t, a;
  /// Set when y reached zero before x_end; the samples end there.
  bool turning_point = false;

  std::size_t size() const { return x.size(); }
  /// Samples ordered by increasing t with rows (a, adot, phi, phidot).
  Trajectory to_trajectory() const;
};

/// Integrates the reduced system in x together with t' = 1/y and
/// (ln a)' = w/y. Throws TurningPoint when y0 = 0 or y vanishes before any
/// step, QuadratureFailure when the integrator fails, NonPositiveScaleFactor.
ReducedTrajectory reconstruct(const ReducedSystem& rsys, const ReducedState& r0, double a0, double t0, double x_end,
                              const ReconstructOptions& options = {});

/// Header x,y,w,t,a and 17 significant digits.
void write_csv(const ReducedTrajectory& traj, std::ostream& out);

}  // namespace liefrw
