#include <doctest.h>

#include <cmath>
#include <sstream>

#include "liefrw/reduce.hpp"

using namespace liefrw;

namespace {

const FrwSymbols& f() { return frw_symbols(); }
const ReducedSymbols& r() { return reduced_symbols(); }

State make_state(double a, double adot, double phi, double phidot) {
  State st;
  st.values[f().a] = {a, adot};
  st.values[f().phi] = {phi, phidot};
  return st;
}

double eval_xyw(const Expr& e, double x, double y, double w) {
  NumericBinding b;
  b.set(r().x, x).set(r().y, y).set(r().w, w);
  return evaluate(e, b);
}

}  // namespace

TEST_CASE("invariants of a state") {
  ReducedState z = to_invariants(make_state(1, 1, 0, 0.3));
  CHECK(z.x == 0.0);
  CHECK(z.y == 0.3);
  CHECK(z.w == 1.0);
  CHECK(to_invariants(make_state(2, -2, 0, 0)).w == -1.0);
  for (double t : {0.0, 1.0, 3.0}) CHECK(to_invariants(make_state(std::exp(t), std::exp(t), 0.5, 0)).w == 1.0);
  CHECK_THROWS_AS(to_invariants(make_state(0, 1, 0, 0)), NonPositiveScaleFactor);
}

TEST_CASE("conformal reduction matches the substitution into the equations") {
  for (Potential pot : {Potential::exponential(var("c"), -2), Potential::opaque()}) {
    ReducedSystem rs = reduced_system(pot, ReducedVariant::Conformal);
    auto [dy, dw] = invariant_substitution(frw_system(ModelConfig{0, pot}));
    CHECK(is_zero(rs.dy_dx - dy));
    CHECK(is_zero(rs.dw_dx - dw));
  }
}

TEST_CASE("proper reduction has the 3wy term") {
  Potential pot = Potential::opaque();
  ReducedSystem rs = reduced_system(pot, ReducedVariant::Proper);
  Expr x(r().x), y(r().y), w(r().w);
  CHECK(is_zero(rs.dy_dx - (-3 * w * y - pot.derivative(x)) / y));
  CHECK(is_zero(rs.dw_dx - (6 * pot.at(x) - 3 * y * y - 3 * w * w) / (2 * y)));
  // The Euler-Lagrange route gives the same pair.
  ModelConfig cfg{0, pot};
  Lagrangian L = lagrangian(cfg);
  ODESystem el{"el", L.context, {}, {}, {}, {}};
  for (Symbol u : {f().a, f().phi}) {
    el.equations.push_back(solve_for_leading(euler_lagrange(L, u), u, L.context.jet(u, 2), symbol_name(u)));
  }
  auto [dy, dw] = invariant_substitution(el);
  CHECK(is_zero(dy - rs.dy_dx));
  CHECK(is_zero(dw - rs.dw_dx));
}

TEST_CASE("curvature keeps the scale factor in the reduced equations") {
  CHECK_THROWS_AS(invariant_substitution(frw_proper_time_system(ModelConfig{1, Potential::opaque()})), NotPolynomial);
}

TEST_CASE("reduced right sides are non-autonomous and singular at y = 0") {
  ReducedSystem rs = reduced_system(Potential::exponential(Expr(1), -2), ReducedVariant::Conformal);
  CHECK(rs.dy_dx.depends_on(r().x));
  for (const Expr* e : {&rs.dy_dx, &rs.dw_dx}) {
    auto conds = nonvanishing_conditions(*e);
    bool has_y = false;
    for (const auto& c : conds) has_y = has_y || c == Expr(r().y);
    CHECK(has_y);
  }
  ReducedSystem flat = reduced_system(Potential::constant(2), ReducedVariant::Conformal);
  CHECK_FALSE(flat.dy_dx.depends_on(r().x));
}

TEST_CASE("de Sitter fixed point") {
  const double V0 = 0.5;
  ReducedSystem rs = reduced_system(Potential::constant(Rational(1, 2)), ReducedVariant::Conformal);
  Expr x(r().x), y(r().y), w(r().w);
  // Numerators of the right sides vanish at y = 0, w = sqrt(2 V0).
  double wf = std::sqrt(2 * V0);
  CHECK(eval_xyw(normalize(rs.dy_dx * y), 0.3, 0.0, wf) == 0.0);
  CHECK(std::abs(eval_xyw(normalize(rs.dw_dx * y), 0.3, 0.0, wf)) < 1e-15);
  CHECK(std::abs(eval_xyw(reduced_conserved(rs.potential), 0.3, 0.0, wf)) < 1e-15);
}

TEST_CASE("reduced conserved quantity") {
  for (ReducedVariant v : {ReducedVariant::Conformal, ReducedVariant::Proper}) {
    for (Potential pot : {Potential::opaque(), Potential::exponential(Expr(1), -2)}) {
      CHECK(is_zero(reduced_conservation_defect(reduced_system(pot, v))));
    }
  }
  ReducedSystem conformal = reduced_system(Potential::opaque(), ReducedVariant::Conformal);
  conformal.conserved_power = 3;
  CHECK_FALSE(is_zero(reduced_conservation_defect(conformal)));
}

TEST_CASE("reconstruction matches direct integration") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  State s0 = constrained_initial_state(1, 0, 0.3, cfg);
  ReducedSystem rs = reduced_system(pot, ReducedVariant::Conformal);
  ReducedTrajectory rt = reconstruct(rs, to_invariants(s0), 1, 0, 1);
  REQUIRE_FALSE(rt.turning_point);
  IntegrateOptions o;
  o.output_times = rt.t;
  Trajectory direct = solve_ivp(frw_system(cfg), s0, rt.t.back(), o);
  REQUIRE(direct.size() == rt.size());
  double err = 0, drift = 0;
  for (std::size_t i = 0; i < rt.size(); ++i) {
    State d = direct.state(i);
    err = std::max(err, std::abs(rt.a[i] - d.value(f().a)) / d.value(f().a));
    err = std::max(err, std::abs(rt.x[i] - d.value(f().phi)) / std::max(1.0, std::abs(d.value(f().phi))));
    ReducedState z = to_invariants(d);
    err = std::max(err, std::abs(z.y - rt.y[i]) / std::max(1.0, std::abs(z.y)));
    err = std::max(err, std::abs(z.w - rt.w[i]) / std::max(1.0, std::abs(z.w)));
    double E = rt.a[i] * rt.a[i] * eval_xyw(reduced_conserved(pot), rt.x[i], rt.y[i], rt.w[i]);
    drift = std::max(drift, std::abs(E));
  }
  CHECK(err <= 1e-6);
  CHECK(drift <= 1e-7);

  Trajectory back = rt.to_trajectory();
  CHECK(back.size() == rt.size());
  CHECK(back.state(0).rate(f().a) == doctest::Approx(s0.rate(f().a)));
}

TEST_CASE("reduce then evolve equals evolve then reduce") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  State s0 = constrained_initial_state(1.3, 0.5, 0.4, cfg);
  Trajectory direct = solve_ivp(frw_system(cfg), s0, 0.8, IntegrateOptions{});
  ReducedState end = to_invariants(direct.state(direct.size() - 1));
  ReducedTrajectory rt = reconstruct(reduced_system(pot, ReducedVariant::Conformal), to_invariants(s0), 1.3, 0, end.x);
  CHECK(rt.y.back() == doctest::Approx(end.y).epsilon(1e-8));
  CHECK(rt.w.back() == doctest::Approx(end.w).epsilon(1e-8));
  CHECK(rt.t.back() == doctest::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("constant w recovers an exact exponential") {
  // Frozen reduced field: only the quadratures for t and ln a move.
  ReducedSystem rs = reduced_system(Potential::constant(Rational(1, 2)), ReducedVariant::Conformal);
  rs.dy_dx = Expr(0);
  rs.dw_dx = Expr(0);
  const double w = 0.8, y = 0.5, a0 = 1.7, t0 = 0.25;
  ReducedTrajectory rt = reconstruct(rs, ReducedState{0, y, w}, a0, t0, 2);
  for (std::size_t i = 0; i < rt.size(); ++i) {
    double exact = a0 * std::exp(w * (rt.t[i] - t0));
    CHECK(std::abs(rt.a[i] - exact) <= 1e-9 * exact);
    CHECK(rt.t[i] == doctest::Approx(t0 + rt.x[i] / y).epsilon(1e-12));
  }
}

TEST_CASE("reconstruction edge cases") {
  ReducedSystem rs = reduced_system(Potential::exponential(Expr(1), -2), ReducedVariant::Conformal);
  ReducedTrajectory one = reconstruct(rs, ReducedState{0.2, 0.3, 1.0}, 2.0, 1.5, 0.2);
  REQUIRE(one.size() == 1);
  CHECK(one.t[0] == 1.5);
  CHECK(one.a[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(reconstruct(rs, ReducedState{0, 0, 1}, 1, 0, 1), TurningPoint);
  CHECK_THROWS_AS(reconstruct(rs, ReducedState{0, 0.3, 1}, -1, 0, 1), NonPositiveScaleFactor);

  // Decelerating field reaches y = 0 before x_end.
  ReducedTrajectory turn = reconstruct(rs, ReducedState{0, -0.05, 0.5}, 1, 0, -5);
  CHECK(turn.turning_point);
  CHECK(turn.x.back() > -5);
}

TEST_CASE("reduced CSV export") {
  ReducedSystem rs = reduced_system(Potential::exponential(Expr(1), -2), ReducedVariant::Conformal);
  ReducedTrajectory rt = reconstruct(rs, ReducedState{0, 0.3, 1}, 1, 0, 0.1, ReconstructOptions{1e-12, 1e-14, 5, {}});
  std::ostringstream out;
  write_csv(rt, out);
  std::string text = out.str();
  CHECK(text.rfind("x,y,w,t,a\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}
