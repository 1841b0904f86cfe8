#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liefrw/expr.hpp"
#include "liefrw/jet.hpp"
#include "liefrw/models.hpp"

namespace liefrw {

struct State {
  double t = 0.0;
  /// dependent -> (value, first derivative)
  std::map<Symbol, std::pair<double, double>> values;

  double value(Symbol u) const;
  double rate(Symbol u) const;
};

enum class Termination { Completed, SingularScaleFactor, StepUnderflow, NonFiniteDerivative };
std::string to_string(Termination t);

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

struct Trajectory {
  /// Column order of every state row: u0, u0', u1, u1', ...
  std::vector<Symbol> dependents;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::vector<double>>> monitors;
  IntegratorStats stats;
  Termination termination = Termination::Completed;
  std::string message;

  std::size_t size() const { return times.size(); }
  State state(std::size_t i) const;
  const std::vector<double>& monitor(const std::string& name) const;
  /// Throws StepUnderflow or NonFiniteDerivative unless the run completed.
  void require_complete() const;
};

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Uniform output grid size (endpoints included) when `output_times` is empty.
  std::size_t samples = 101;
  std::vector<double> output_times;
  std::vector<std::pair<std::string, Expr>> monitors;
  /// Second derivative prescribed for free dependents (the lapse); zero by default.
  std::map<Symbol, Expr> gauge;
  /// Numeric rules for opaque functions appearing in the equations.
  std::map<FunctionRef, NumericFunction> functions;
  /// Integration stops when the scale factor falls to this fraction of a0.
  double singular_fraction = 1e-8;
  std::size_t max_steps = 5'000'000;
};

/// Adaptive Dormand-Prince 5(4) with dense sampling. Stops early and reports
/// the reason on scale-factor collapse, step underflow or non-finite
/// derivatives. Throws MonitorUnbound for monitors that cannot be evaluated
/// from the state, DegenerateLapse when N vanishes.
Trajectory solve_ivp(const ODESystem& sys, const State& s0, double t_end, const IntegrateOptions& options = {});

/// adot0 = branch * sqrt(2 a0^2 V + a0^2 phidot0^2 - k) (with the lapse N0
/// entering as in the lapse constraint). Throws ConstraintInfeasible,
/// NonPositiveScaleFactor.
State constrained_initial_state(double a0, double phi0, double phidot0, const ModelConfig& cfg, int branch = 1,
                                double N0 = 1.0);

/// max |m(t) - m(t0)|. Throws UnknownMonitor.
double monitor_drift(const Trajectory& traj, const std::string& name);

/// Header plus one row per sample, 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& out);

/// Evaluates `e` on every sample of `traj`. Throws MonitorUnbound.
std::vector<double> evaluate_along(const Trajectory& traj, const Expr& e,
                                   const std::map<FunctionRef, NumericFunction>& functions = {});

/// Moves (t, u, u') along the flow of the first prolongation of `g` for
/// parameter `epsilon`.
State transform_state(const VectorField& g, const State& s, double epsilon);

struct PushforwardResult {
  std::vector<double> epsilons;
  std::vector<double> defects;
  /// defects[0] / defects[1]
  double ratio = 0.0;
};

/// Integrates from the transformed initial data and compares at `t_end`
/// with the first-order prediction u + eps Q, u' + eps D_t Q, where
/// Q = xi - tau u'. Symmetries give defects of order eps^2.
PushforwardResult pushforward_test(const VectorField& g, const ODESystem& sys, const State& s0, double t_end,
                                   std::vector<double> epsilons = {1e-4, 5e-5}, IntegrateOptions options = {});

}  // namespace liefrw
