#include <doctest.h>

#include <cmath>
#include <sstream>

#include "liefrw/integrate.hpp"
#include "liefrw/symmetry.hpp"

using namespace liefrw;

namespace {

const FrwSymbols& s() { return frw_symbols(); }

ModelConfig de_sitter() { return ModelConfig{0, Potential::constant(Rational(1, 2))}; }

IntegrateOptions with_energy(const Potential& pot) {
  IntegrateOptions o;
  o.monitors = {{"E", frw_energy(pot)}};
  return o;
}

double max_rel_error_exp(const Trajectory& traj) {
  double err = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    double exact = std::exp(traj.times[i]);
    err = std::max(err, std::abs(traj.state(i).value(s().a) - exact) / exact);
  }
  return err;
}

}  // namespace

TEST_CASE("constrained initial states") {
  State ds = constrained_initial_state(1, 0, 0, de_sitter());
  CHECK(ds.rate(s().a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(constrained_initial_state(1, 0, 0, ModelConfig{1, Potential::constant(0)}), ConstraintInfeasible);
  State neg = constrained_initial_state(1, 0, 1, ModelConfig{0, Potential::constant(0)}, -1);
  CHECK(neg.rate(s().a) == -1.0);
  CHECK_THROWS_AS(constrained_initial_state(-1, 0, 0, de_sitter()), NonPositiveScaleFactor);

  ModelConfig cfg{-1, Potential::exponential(Expr(1), -2)};
  State st = constrained_initial_state(1.7, 0.4, 0.3, cfg);
  NumericBinding b;
  b.set(s().a, 1.7).set(s().adot, st.rate(s().a)).set(s().phi, 0.4).set(s().phidot, 0.3);
  CHECK(std::abs(evaluate(frw_energy(cfg.potential), b) - 1.0) < 1e-14);
}

TEST_CASE("de Sitter expansion") {
  ModelConfig cfg = de_sitter();
  Trajectory traj = solve_ivp(frw_system(cfg), constrained_initial_state(1, 0, 0, cfg), 5, with_energy(cfg.potential));
  CHECK(traj.termination == Termination::Completed);
  CHECK(traj.size() == 101);
  CHECK(max_rel_error_exp(traj) <= 1e-6);
  double maxE = 0;
  for (double e : traj.monitor("E")) maxE = std::max(maxE, std::abs(e));
  CHECK(maxE <= 1e-8);
  for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);
}

TEST_CASE("energy drift for the exponential potential") {
  Potential pot = Potential::exponential(Expr(1), -2);
  for (int k : {-1, 0, 1}) {
    ModelConfig cfg{k, pot};
    Trajectory traj = solve_ivp(frw_system(cfg), constrained_initial_state(1, 0, 0.3, cfg), 10, with_energy(pot));
    traj.require_complete();
    CHECK(monitor_drift(traj, "E") <= 1e-7);
  }
}

TEST_CASE("P drifts little on the proper-time system off the constraint surface") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{1, pot};
  // Off the constraint surface: E(0) = 0.7 instead of -k.
  State s0;
  s0.values[s().phi] = {1.0, 0.3};
  s0.values[s().a] = {1.0, std::sqrt(0.7 + 2 * std::exp(-2.0) + 0.09)};
  IntegrateOptions o;
  Expr a(s().a);
  // a E alone drifts when k != 0; the conserved combination is a (E + k).
  o.monitors = {
      {"P", normalize(a * (frw_energy(pot) + cfg.k))}, {"aE", normalize(a * frw_energy(pot))}, {"one", Expr(1)}};
  Trajectory traj = solve_ivp(frw_proper_time_system(cfg), s0, 10, o);
  traj.require_complete();
  CHECK(monitor_drift(traj, "P") <= 1e-7);
  CHECK(monitor_drift(traj, "aE") > 1.0);
  CHECK(monitor_drift(traj, "one") == 0.0);
  CHECK_THROWS_AS(monitor_drift(traj, "nope"), UnknownMonitor);
}

TEST_CASE("drift shrinks with tolerance") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  State s0 = constrained_initial_state(1, 0, 0.3, cfg);
  IntegrateOptions loose = with_energy(pot), tight = with_energy(pot);
  loose.rtol = 1e-6;
  loose.atol = 1e-8;
  tight.rtol = 1e-9;
  tight.atol = 1e-11;
  double d_loose = monitor_drift(solve_ivp(frw_system(cfg), s0, 10, loose), "E");
  double d_tight = monitor_drift(solve_ivp(frw_system(cfg), s0, 10, tight), "E");
  CHECK(d_tight < d_loose);
}

TEST_CASE("endpoint error follows the fifth-order tolerance law") {
  // The global error scales like rtol; cutting rtol by 32 must gain at least
  // 16 / 2 = 8.
  ModelConfig cfg = de_sitter();
  State s0 = constrained_initial_state(1, 0, 0, cfg);
  auto endpoint_error = [&](double rtol) {
    IntegrateOptions o;
    o.rtol = rtol;
    o.atol = rtol * 1e-2;
    o.output_times = {5.0};
    Trajectory traj = solve_ivp(frw_system(cfg), s0, 5, o);
    return std::abs(traj.rows.back()[0] - std::exp(5.0)) / std::exp(5.0);
  };
  for (double rtol : {1e-5, 1e-6, 1e-7}) {
    double ratio = endpoint_error(rtol) / endpoint_error(rtol / 32);
    CAPTURE(rtol);
    CHECK(ratio >= 8.0);
  }
}

TEST_CASE("autonomous systems are time-translation equivariant") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  State s0 = constrained_initial_state(1, 0.2, 0.3, cfg);
  State s1 = s0;
  const double delta = 3.0;
  s1.t += delta;
  IntegrateOptions o;
  Trajectory base = solve_ivp(frw_system(cfg), s0, 4, o);
  Trajectory shifted = solve_ivp(frw_system(cfg), s1, 4 + delta, o);
  REQUIRE(base.size() == shifted.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(shifted.times[i] == doctest::Approx(base.times[i] + delta).epsilon(1e-14));
    for (std::size_t j = 0; j < base.rows[i].size(); ++j) {
      CHECK(std::abs(shifted.rows[i][j] - base.rows[i][j]) <= 1e-9 * (1 + std::abs(base.rows[i][j])));
    }
  }
}

TEST_CASE("scaling a0 scales a(t) when flat") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  const double lambda = 2.5;
  Trajectory base = solve_ivp(frw_system(cfg), constrained_initial_state(1, 0.1, 0.3, cfg), 6);
  Trajectory scaled = solve_ivp(frw_system(cfg), constrained_initial_state(lambda, 0.1, 0.3, cfg), 6);
  for (std::size_t i = 0; i < base.size(); ++i) {
    State b = base.state(i), c = scaled.state(i);
    CHECK(std::abs(c.value(s().a) - lambda * b.value(s().a)) <= 1e-8 * lambda * b.value(s().a));
    CHECK(std::abs(c.value(s().phi) - b.value(s().phi)) <= 1e-8 * (1 + std::abs(b.value(s().phi))));
  }
}

TEST_CASE("collapse stops and reports a partial trajectory") {
  ModelConfig cfg{1, Potential::constant(0)};
  State s0 = constrained_initial_state(1, 0, 2, cfg, -1);
  Trajectory traj = solve_ivp(frw_system(cfg), s0, 10);
  CHECK(traj.termination != Termination::Completed);
  CHECK(traj.size() >= 1);
  CHECK(traj.times.back() < 10);
  CHECK_THROWS(traj.require_complete());
}

TEST_CASE("monitors must be bound by the state") {
  ModelConfig cfg = de_sitter();
  IntegrateOptions o;
  o.monitors = {{"bad", var("q")}};
  CHECK_THROWS_AS(solve_ivp(frw_system(cfg), constrained_initial_state(1, 0, 0, cfg), 1, o), MonitorUnbound);
}

TEST_CASE("lapse runs need a nonzero lapse") {
  ModelConfig cfg{0, Potential::constant(Rational(1, 2)), LapseMode::Dynamical};
  State s0 = constrained_initial_state(1, 0, 0, cfg, 1, 1.0);
  s0.values[s().N] = {0.0, 0.0};
  CHECK_THROWS_AS(solve_ivp(frw_lapse_system(cfg), s0, 1), DegenerateLapse);
}

TEST_CASE("lapse N = 1 matches unit lapse") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig lapse{0, pot, LapseMode::Dynamical}, unit{0, pot};
  Trajectory a = solve_ivp(frw_lapse_system(lapse), constrained_initial_state(1, 0, 0.3, lapse), 5);
  Trajectory b = solve_ivp(frw_system(unit), constrained_initial_state(1, 0, 0.3, unit), 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.state(i).value(s().a) == doctest::Approx(b.state(i).value(s().a)).epsilon(1e-9));
    CHECK(a.state(i).value(s().N) == 1.0);
  }
}

TEST_CASE("CSV export") {
  ModelConfig cfg = de_sitter();
  IntegrateOptions o = with_energy(cfg.potential);
  o.samples = 3;
  Trajectory traj = solve_ivp(frw_system(cfg), constrained_initial_state(1, 0, 0, cfg), 1, o);
  std::ostringstream out;
  write_csv(traj, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,a,adot,phi,phidot,E");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  CHECK(out.str().find("2.7182818") != std::string::npos);
}

TEST_CASE("transform_state follows the flow exactly for scaling and translation") {
  ModelConfig cfg = de_sitter();
  JetContext ctx = frw_context();
  State s0 = constrained_initial_state(1.5, 0.2, 0.1, cfg);
  State z = transform_state(generator_Z(ctx), s0, 0.3);
  CHECK(z.value(s().a) == doctest::Approx(1.5 * std::exp(0.3)).epsilon(1e-12));
  CHECK(z.rate(s().a) == doctest::Approx(s0.rate(s().a) * std::exp(0.3)).epsilon(1e-12));
  State y = transform_state(generator_Y(ctx), s0, 0.3);
  CHECK(y.t == doctest::Approx(0.3));
  CHECK(y.value(s().a) == doctest::Approx(1.5));
}

TEST_CASE("pushforward distinguishes symmetries") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  ODESystem sys = frw_system(cfg);
  State s0 = constrained_initial_state(1, 1, 0.3, cfg);
  IntegrateOptions o;
  o.rtol = 1e-13;
  o.atol = 1e-15;
  for (const char* g : {"X", "Y", "Z"}) {
    PushforwardResult r = pushforward_test(named_generator(g, sys.context), sys, s0, 2, {1e-4, 5e-5}, o);
    CAPTURE(g);
    CHECK(std::abs(r.ratio - 4) <= 0.5);
  }
  ModelConfig quad{0, Potential::polynomial({0, 0, 1})};
  ODESystem qs = frw_system(quad);
  PushforwardResult bad =
      pushforward_test(generator_X(qs.context), qs, constrained_initial_state(1, 1, 0.3, quad), 2, {1e-4, 5e-5}, o);
  CHECK(std::abs(bad.ratio - 4) > 0.5);
}

TEST_CASE("the symmetry family keeps flat trajectories on E = 0") {
  Potential pot = Potential::exponential(Expr(1), -2);
  ModelConfig cfg{0, pot};
  ODESystem sys = frw_system(cfg);
  GeneratorFamily fam{Expr(Rational(1, 3)), Expr(Rational(-1, 2)), Expr(Rational(2, 5))};
  VectorField g = fam.field(sys.context);
  State s0 = constrained_initial_state(1, 0.5, 0.3, cfg);
  Expr E = frw_energy(pot);
  IntegrateOptions o;
  o.monitors = {{"E", E}};
  for (double eps : {0.05, 0.2}) {
    State moved = transform_state(g, s0, eps);
    Trajectory traj = solve_ivp(sys, moved, moved.t + 5, o);
    traj.require_complete();
    for (double e : traj.monitor("E")) CHECK(std::abs(e) <= 1e-9);
  }
}
