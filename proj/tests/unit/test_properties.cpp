#include <doctest.h>

#include "../support/properties.hpp"

using namespace liefrw;

TEST_CASE("generated corpus passes round trip, linearity and finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    testing::PropertyTally t = testing::run_property_suite(500, seed);
    CAPTURE(seed);
    for (const auto& f : t.failures) MESSAGE(f);
    CHECK(t.round_trip == 0);
    CHECK(t.linearity == 0);
    CHECK(t.finite_difference == 0);
  }
}

TEST_CASE("collect reassembles generated polynomials") {
  testing::ExprGenerator gen(99);
  const auto& vars = gen.variables();
  for (int i = 0; i < 200; ++i) {
    // Polynomial in x, y with coefficients that may involve z anywhere.
    Expr coeff = exp(Expr(gen.rational()) * Expr(vars[2]) / 3) + Expr(gen.rational());
    Expr e = coeff * pow(Expr(vars[0]) + Expr(gen.rational()), 2) * Expr(vars[1]) + gen.leaf() * Expr(vars[2]);
    Collected c = collect(e, {vars[0], vars[1]});
    CHECK(is_zero(c.reassemble() - e));
    for (const auto& [mono, k] : c.terms()) {
      CHECK_FALSE(k.depends_on(vars[0]));
      CHECK_FALSE(k.depends_on(vars[1]));
    }
  }
}

TEST_CASE("mixed opaque partials are node-identical") {
  Symbol x = variable("x"), y = variable("y"), z = variable("z");
  FunctionRef g = declare_function("g3", {x, y, z});
  Expr e = Expr::apply(g);
  std::vector<Symbol> order{x, y, z, x};
  std::sort(order.begin(), order.end());
  Expr reference;
  bool first = true;
  do {
    Expr d = e;
    for (Symbol v : order) d = differentiate(d, v);
    if (first) reference = d;
    CHECK(d == reference);
    first = false;
  } while (std::next_permutation(order.begin(), order.end()));
}
