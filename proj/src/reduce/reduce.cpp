#include "liefrw/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "integrate/dopri5.hpp"

namespace liefrw {

ReducedState to_invariants(const State& s) {
  const auto& f = frw_symbols();
  double a = s.value(f.a);
  if (!(a > 0.0)) throw NonPositiveScaleFactor("the reduction requires a > 0");
  return {s.value(f.phi), s.rate(f.phi), s.rate(f.a) / a};
}

std::string to_string(ReducedVariant v) { return v == ReducedVariant::Conformal ? "conformal" : "proper"; }

const ReducedSymbols& reduced_symbols() {
  static const ReducedSymbols symbols{variable("x"), variable("y"), variable("w")};
  return symbols;
}

JetContext reduced_context() {
  const auto& r = reduced_symbols();
  return JetContext(r.x, {r.y, r.w}, 1);
}

std::pair<Expr, Expr> invariant_substitution(const ODESystem& sys) {
  const auto& f = frw_symbols();
  const auto& r = reduced_symbols();
  JetContext rc = reduced_context();
  const Symbol yp = rc.jet(r.y, 1), wp = rc.jet(r.w, 1);
  Expr a(f.a), x(r.x), y(r.y), w(r.w);
  Binding b;
  b.set(f.phi, x);
  b.set(f.phidot, y);
  b.set(f.adot, w * a);
  b.set(f.phiddot, y * Expr(yp));
  b.set(f.addot, a * (y * Expr(wp) + w * w));
  Expr dy, dw;
  for (const auto& eq : sys.equations) {
    Expr reduced = normalize(substitute(eq.residual(), b));
    if (eq.dependent == f.phi) {
      dy = solve_for_leading(reduced, r.y, yp, eq.label).rhs;
    } else if (eq.dependent == f.a) {
      dw = solve_for_leading(reduced, r.w, wp, eq.label).rhs;
    }
  }
  for (const Expr* e : {&dy, &dw}) {
    if (!is_zero(differentiate(*e, f.a))) {
      throw NotPolynomial("the scale factor does not drop out of the reduced equation " + render(*e));
    }
  }
  return {dy, dw};
}

ReducedSystem reduced_system(const Potential& pot, ReducedVariant variant) {
  const auto& r = reduced_symbols();
  Expr x(r.x), y(r.y), w(r.w);
  ReducedSystem rs;
  rs.variant = variant;
  rs.potential = pot;
  if (variant == ReducedVariant::Conformal) {
    rs.dy_dx = normalize((-3 * w * y - pot.derivative(x)) / y);
    rs.dw_dx = normalize((2 * pot.at(x) - 2 * y * y - w * w) / y);
    rs.conserved_power = 2;
  } else {
    auto [dy, dw] = invariant_substitution(frw_proper_time_system(ModelConfig{0, pot, LapseMode::Unit}));
    rs.dy_dx = dy;
    rs.dw_dx = dw;
    rs.conserved_power = 3;
  }
  return rs;
}

Expr reduced_conserved(const Potential& pot) {
  const auto& r = reduced_symbols();
  Expr x(r.x), y(r.y), w(r.w);
  return normalize(w * w - 2 * pot.at(x) - y * y);
}

Expr reduced_conservation_defect(const ReducedSystem& rsys) {
  const auto& r = reduced_symbols();
  Expr F = reduced_conserved(rsys.potential);
  Expr y(r.y), w(r.w);
  Expr dF = differentiate(F, r.x) + differentiate(F, r.y) * rsys.dy_dx + differentiate(F, r.w) * rsys.dw_dx;
  return normalize(Expr(rsys.conserved_power) * w / y * F + dF);
}

Trajectory ReducedTrajectory::to_trajectory() const {
  const auto& f = frw_symbols();
  Trajectory traj;
  traj.dependents = {f.a, f.phi};
  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (size() > 1 && t.back() < t.front()) std::reverse(order.begin(), order.end());
  for (std::size_t i : order) {
    traj.times.push_back(t[i]);
    traj.rows.push_back({a[i], w[i] * a[i], x[i], y[i]});
  }
  return traj;
}

ReducedTrajectory reconstruct(const ReducedSystem& rsys, const ReducedState& r0, double a0, double t0, double x_end,
                              const ReconstructOptions& options) {
  if (!(a0 > 0.0)) throw NonPositiveScaleFactor("a0 must be positive");
  if (r0.y == 0.0) throw TurningPoint("y vanishes at the start of the segment");
  const auto& r = reduced_symbols();
  std::vector<Symbol> inputs{r.x, r.y, r.w};
  CompiledExprs rhs({rsys.dy_dx, rsys.dw_dx}, inputs, options.functions);

  std::vector<double> in(3), out(2), scratch;
  const double sign0 = r0.y > 0.0 ? 1.0 : -1.0;
  const double y_floor = 1e-8 * std::abs(r0.y);
  // State (y, w, t, ln a) as functions of x.
  detail::OdeRhs f = [&](double x, std::span<const double> z, std::span<double> dz) {
    if (z[0] * sign0 <= 0.0) return false;
    in = {x, z[0], z[1]};
    try {
      rhs.run(in, out, scratch);
    } catch (const DomainError&) {
      return false;
    }
    dz[0] = out[0];
    dz[1] = out[1];
    dz[2] = 1.0 / z[0];
    dz[3] = z[1] / z[0];
    return true;
  };

  ReducedTrajectory traj;
  auto record = [&](double x, std::span<const double> z) {
    traj.x.push_back(x);
    traj.y.push_back(z[0]);
    traj.w.push_back(z[1]);
    traj.t.push_back(z[2]);
    traj.a.push_back(std::exp(z[3]));
  };
  std::vector<double> z0{r0.y, r0.w, t0, std::log(a0)};
  std::vector<double> grid;
  std::size_t m = x_end == r0.x ? 1 : std::max<std::size_t>(options.samples, 2);
  for (std::size_t i = 0; i < m; ++i) {
    grid.push_back(i + 1 == m ? x_end : r0.x + (x_end - r0.x) * static_cast<double>(i) / static_cast<double>(m - 1));
  }
  const double direction = x_end >= r0.x ? 1.0 : -1.0;
  std::size_t next = 0;
  record(r0.x, z0);
  ++next;
  bool turning = false;
  std::vector<double> buffer(4);
  detail::StepObserver observer = [&](const detail::DenseStep& step, std::span<const double> z) {
    while (next < grid.size() && (step.t_new - grid[next]) * direction >= 0.0) {
      if (grid[next] == step.t_new) {
        record(grid[next], z);
      } else {
        step.eval(grid[next], buffer);
        record(grid[next], buffer);
      }
      ++next;
    }
    if (z[0] * sign0 <= y_floor) {
      turning = true;
      return false;
    }
    return true;
  };
  detail::DopriOptions o;
  o.rtol = options.rtol;
  o.atol = options.atol;
  auto res = detail::dopri5(f, r0.x, z0, x_end, o, observer);
  switch (res.status) {
    case detail::DopriStatus::Completed:
      break;
    case detail::DopriStatus::Stopped:
      traj.turning_point = turning;
      break;
    case detail::DopriStatus::NonFiniteDerivative:
    case detail::DopriStatus::StepUnderflow:
    case detail::DopriStatus::TooManySteps: {
      // The reduced field blows up as y -> 0, which is the turning point.
      bool near_turn = std::abs(res.y[0]) <= 1e-3 * std::abs(r0.y);
      if (res.stats.steps == 0 && near_turn) throw TurningPoint("y vanishes immediately after the start");
      if (!near_turn) throw QuadratureFailure("reduced integration failed at x = " + std::to_string(res.t));
      traj.turning_point = true;
      break;
    }
  }
  if (traj.turning_point && traj.x.back() != res.t) record(res.t, res.y);
  return traj;
}

void write_csv(const ReducedTrajectory& traj, std::ostream& out) {
  out << "x,y,w,t,a\n";
  char buf[128];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.x[i], traj.y[i], traj.w[i], traj.t[i],
                  traj.a[i]);
    out << buf;
  }
}

}  // namespace liefrw
