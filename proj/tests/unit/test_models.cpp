#include <doctest.h>

#include <cmath>

#include "liefrw/models.hpp"

using namespace liefrw;

namespace {

const FrwSymbols& s() { return frw_symbols(); }

double eval_at(const Expr& e, std::initializer_list<std::pair<Symbol, double>> values) {
  NumericBinding b;
  for (auto [k, v] : values) b.set(k, v);
  return evaluate(e, b);
}

}  // namespace

TEST_CASE("conformal system") {
  ModelConfig cfg;
  ODESystem sys = frw_system(cfg);
  REQUIRE(sys.equations.size() == 2);
  REQUIRE(sys.constraints.size() == 1);
  CHECK(sys.constraints[0] == frw_energy(cfg.potential));
  Expr a(s().a), pd(s().phidot), V = cfg.potential.in_phi();
  CHECK(sys.equation_for(s().a).rhs == normalize(2 * a * V - 2 * a * pd * pd));
  CHECK(sys.equation_for(s().phi).leading == s().phiddot);

  ODESystem c = frw_system(ModelConfig{0, Potential::constant(Rational(1, 2))});
  CHECK(c.on_shell(Expr(s().phiddot)) == normalize(-3 * Expr(s().adot) * Expr(s().phidot) / Expr(s().a)));
  CHECK(substitute(c.on_shell(Expr(s().phiddot)), Binding().set(s().phidot, Expr(0))).is_constant(0));

  ODESystem closed = frw_system(ModelConfig{1, Potential::exponential(Expr(1), -2)});
  CHECK(closed.constraints[0] == normalize(frw_energy(Potential::exponential(Expr(1), -2)) + 1));
  CHECK_THROWS_AS((ModelConfig{2}).validate(), ConfigError);
}

TEST_CASE("proper-time system agrees with the constrained form on the constraint surface") {
  for (int k : {-1, 0, 1}) {
    ModelConfig cfg{k, Potential::opaque()};
    Expr a(s().a), ad(s().adot), pd(s().phidot), V = cfg.potential.in_phi();
    Expr proper = frw_proper_time_system(cfg).equation_for(s().a).rhs;
    Expr conformal = frw_system(cfg).equation_for(s().a).rhs;
    // Eliminate adot^2 with the constraint.
    Expr diff = normalize(2 * a * (proper - conformal));
    Expr constraint = normalize(ad * ad - 2 * a * a * V - a * a * pd * pd + k);
    CHECK(is_zero(reduce_modulo(diff, constraint)));
    CHECK_FALSE(is_zero(diff));
    CHECK(frw_proper_time_system(cfg).constraints.empty());
  }
}

TEST_CASE("proper-time acceleration values") {
  ModelConfig cfg{0, Potential::constant(Rational(1, 2))};
  Expr rhs = frw_proper_time_system(cfg).equation_for(s().a).rhs;
  double a = 1.3;
  CHECK(eval_at(rhs, {{s().a, a}, {s().adot, a}, {s().phidot, 0.0}}) == doctest::Approx(2 * a * 0.5));
  Expr vac = frw_proper_time_system(ModelConfig{0, Potential::constant(0)}).equation_for(s().a).rhs;
  CHECK(eval_at(vac, {{s().a, 1.0}, {s().adot, 0.0}, {s().phidot, 0.0}}) == 0.0);
}

TEST_CASE("lapse system at N = 1 reproduces the unit-lapse system") {
  for (int k : {-1, 0, 1}) {
    ModelConfig cfg{k, Potential::opaque(), LapseMode::Dynamical};
    ODESystem lapse = frw_lapse_system(cfg);
    ODESystem unit = frw_system(ModelConfig{k, Potential::opaque()});
    Binding n1;
    n1.set(s().N, Expr(1)).set(s().Ndot, Expr(0));
    for (Symbol u : {s().a, s().phi}) {
      CHECK(substitute(lapse.equation_for(u).rhs, n1) == unit.equation_for(u).rhs);
    }
    CHECK(substitute(lapse.constraints[0], n1) == unit.constraints[0]);
    REQUIRE(lapse.free_dependents.size() == 1);
    CHECK(lapse.free_dependents[0] == s().N);
  }
}

TEST_CASE("K vanishes on constraint-satisfying lapse states") {
  ModelConfig cfg{1, Potential::exponential(Expr(1), -2), LapseMode::Dynamical};
  ODESystem sys = frw_lapse_system(cfg);
  for (double N : {1.0, 2.0, 0.5}) {
    double a = 1.5, phi = 0.2, pd = 0.4, V = std::exp(-2 * phi);
    double ad = std::sqrt(2 * N * N * a * a * V + a * a * pd * pd - N * N);
    double c = eval_at(sys.constraints[0], {{s().a, a}, {s().adot, ad}, {s().phi, phi}, {s().phidot, pd}, {s().N, N}});
    CHECK(std::abs(c) < 1e-12);
  }
}

TEST_CASE("lagrangian values") {
  Expr L0 = lagrangian(ModelConfig{0, Potential::constant(0)}).L;
  CHECK(eval_at(L0, {{s().a, 1.0}, {s().adot, 1.0}, {s().phidot, 0.0}}) == -0.5);
  Expr L1 = lagrangian(ModelConfig{1, Potential::constant(0)}).L;
  CHECK(eval_at(L1, {{s().a, 2.0}, {s().adot, 0.0}, {s().phidot, 0.0}}) == 1.0);
  for (int k : {-1, 0, 1}) {
    Expr LN = lagrangian(ModelConfig{k, Potential::opaque(), LapseMode::Dynamical}).L;
    CHECK(substitute(LN, Binding().set(s().N, Expr(1))) == lagrangian(ModelConfig{k, Potential::opaque()}).L);
  }
}

TEST_CASE("Euler-Lagrange expressions") {
  ModelConfig cfg{1, Potential::opaque()};
  Lagrangian L = lagrangian(cfg);
  Expr a(s().a), ad(s().adot), add(s().addot), pd(s().phidot), pdd(s().phiddot), V = cfg.potential.in_phi();
  Expr dV = cfg.potential.derivative(Expr(s().phi));
  Expr k(cfg.k);
  CHECK(euler_lagrange(L, s().phi) == normalize(-(pow(a, 3) * pdd + 3 * a * a * ad * pd + pow(a, 3) * dV)));
  auto ratio =
      constant_ratio(euler_lagrange(L, s().a), -2 * a * add - ad * ad - k - 3 * a * a * pd * pd + 6 * a * a * V);
  REQUIRE(ratio.has_value());
  CHECK(*ratio == Rational(-1, 2));

  ModelConfig lapse{1, Potential::opaque(), LapseMode::Dynamical};
  Lagrangian LN = lagrangian(lapse);
  ODESystem lsys = frw_lapse_system(lapse);
  auto rN =
      constant_ratio(euler_lagrange(LN, s().N), normalize(lsys.constraints[0] * Expr(s().a) / pow(Expr(s().N), 2)));
  CHECK(rN.has_value());
}

TEST_CASE("Euler-Lagrange equations solve to the proper-time system") {
  for (int k : {-1, 0, 1}) {
    ModelConfig cfg{k, Potential::opaque()};
    Lagrangian L = lagrangian(cfg);
    ODESystem sys = frw_proper_time_system(cfg);
    for (Symbol u : {s().a, s().phi}) {
      Symbol lead = sys.context.jet(u, 2);
      SolvedEquation sol = solve_for_leading(euler_lagrange(L, u), u, lead, "el");
      CHECK(sol.rhs == sys.equation_for(u).rhs);
    }
  }
}

TEST_CASE("potentials") {
  Symbol phi = s().phi;
  CHECK(Potential::exponential(var("c"), -2).derivative(Expr(phi)) == normalize(-2 * var("c") * exp(-2 * Expr(phi))));
  CHECK(Potential::constant(3).derivative(Expr(phi)).is_constant(0));
  CHECK(Potential::polynomial({1, 0, 2}).derivative(Expr(phi), 2).is_constant(4));
  CHECK(Potential::opaque().is_opaque());
  CHECK(Potential::opaque().derivative(Expr(phi), 2) == differentiate(Expr::apply(s().V), phi, 2));
}

TEST_CASE("solve_for_leading requires linear occurrence") {
  Symbol add = s().addot;
  CHECK_THROWS_AS(solve_for_leading(pow(Expr(add), 2) - 1, s().a, add, "sq"), NotPolynomial);
  CHECK(solve_for_leading(3 * Expr(add) - 6, s().a, add, "lin").rhs.is_constant(2));
}
