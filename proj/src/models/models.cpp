#include "liefrw/models.hpp"

namespace liefrw {

const FrwSymbols& frw_symbols() {
  static const FrwSymbols symbols = [] {
    FrwSymbols s;
    s.t = variable("t");
    s.a = variable("a");
    s.phi = variable("phi");
    s.N = variable("N");
    s.adot = jet_variable(s.a, s.t, 1);
    s.addot = jet_variable(s.a, s.t, 2);
    s.phidot = jet_variable(s.phi, s.t, 1);
    s.phiddot = jet_variable(s.phi, s.t, 2);
    s.Ndot = jet_variable(s.N, s.t, 1);
    s.Nddot = jet_variable(s.N, s.t, 2);
    s.V = declare_function("V", {s.phi});
    return s;
  }();
  return symbols;
}

JetContext frw_context(bool with_lapse) {
  const auto& s = frw_symbols();
  std::vector<Symbol> deps{s.a, s.phi};
  if (with_lapse) deps.push_back(s.N);
  return JetContext(s.t, deps, 2);
}

// ---------------------------------------------------------------------------

Potential Potential::opaque() { return Potential(); }

Potential Potential::exponential(Expr c, Rational lambda) {
  Potential p;
  p.kind_ = Kind::Exponential;
  p.scale_ = normalize(c);
  p.rate_ = lambda;
  return p;
}

Potential Potential::constant(Rational v0) {
  Potential p;
  p.kind_ = Kind::Constant;
  p.scale_ = Expr(v0);
  return p;
}

Potential Potential::polynomial(std::vector<Rational> coeffs) {
  Potential p;
  p.kind_ = Kind::Polynomial;
  p.coefficients_ = std::move(coeffs);
  return p;
}

Expr Potential::at(const Expr& x) const {
  switch (kind_) {
    case Kind::Opaque:
      return Expr::apply(frw_symbols().V, {x});
    case Kind::Exponential:
      return normalize(scale_ * exp(Expr(rate_) * x));
    case Kind::Constant:
      return scale_;
    case Kind::Polynomial: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < coefficients_.size(); ++i) {
        terms.push_back(Expr(coefficients_[i]) * pow(x, static_cast<int>(i)));
      }
      return normalize(Expr::sum(std::move(terms)));
    }
  }
  return Expr(0);
}

Expr Potential::derivative(const Expr& x, int n) const {
  if (kind_ == Kind::Opaque) return Expr::apply(frw_symbols().V, {x}, {n});
  const Symbol phi = frw_symbols().phi;
  Binding at_x;
  at_x.set(phi, x);
  return substitute(differentiate(in_phi(), phi, n), at_x);
}

std::string Potential::describe() const {
  switch (kind_) {
    case Kind::Opaque:
      return "V(phi) arbitrary";
    default:
      return "V = " + render(in_phi());
  }
}

void ModelConfig::validate() const {
  if (k < -1 || k > 1) throw ConfigError("curvature k must be -1, 0 or 1, got " + std::to_string(k));
}

// ---------------------------------------------------------------------------

Binding ODESystem::on_shell() const {
  Binding b;
  for (const auto& eq : equations) b.set(eq.leading, eq.rhs);
  return b;
}

const SolvedEquation& ODESystem::equation_for(Symbol dependent) const {
  for (const auto& eq : equations) {
    if (eq.dependent == dependent) return eq;
  }
  throw ContextMismatch("system '" + name + "' has no equation for '" + symbol_name(dependent) + "'");
}

namespace {

std::vector<std::string> side_conditions(const ModelConfig& cfg, bool lapse) {
  std::vector<std::string> out{"a > 0", cfg.potential.describe(), "k = " + std::to_string(cfg.k)};
  if (lapse) out.push_back("N != 0");
  return out;
}

}  // namespace

Expr frw_energy(const Potential& potential) {
  const auto& s = frw_symbols();
  Expr a(s.a), ad(s.adot), pd(s.phidot);
  return normalize(pow(ad, 2) - 2 * pow(a, 2) * potential.in_phi() - pow(a, 2) * pow(pd, 2));
}

ODESystem frw_system(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.lapse != LapseMode::Unit) throw ConfigError("the conformal system requires unit lapse");
  const auto& s = frw_symbols();
  Expr a(s.a), ad(s.adot), pd(s.phidot), phi(s.phi);
  Expr V = cfg.potential.at(phi);
  Expr dV = cfg.potential.derivative(phi);
  ODESystem sys{"conformal", frw_context(false), {}, {}, side_conditions(cfg, false), {}};
  sys.equations.push_back({s.a, s.addot, normalize(2 * a * V - 2 * a * pow(pd, 2)), "second Einstein equation"});
  sys.equations.push_back({s.phi, s.phiddot, normalize(-3 * ad * pd / a - dV), "Klein-Gordon equation"});
  sys.constraints.push_back(normalize(frw_energy(cfg.potential) + Expr(cfg.k)));
  return sys;
}

ODESystem frw_proper_time_system(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.lapse != LapseMode::Unit) throw ConfigError("the proper-time system requires unit lapse");
  const auto& s = frw_symbols();
  Expr a(s.a), ad(s.adot), pd(s.phidot), phi(s.phi), k(cfg.k);
  Expr V = cfg.potential.at(phi);
  Expr dV = cfg.potential.derivative(phi);
  ODESystem sys{"proper", frw_context(false), {}, {}, side_conditions(cfg, false), {}};
  sys.equations.push_back({s.phi, s.phiddot, normalize(-3 * ad * pd / a - dV), "Klein-Gordon equation"});
  sys.equations.push_back({s.a, s.addot,
                           normalize((-pow(ad, 2) - k - 3 * pow(a, 2) * pow(pd, 2) + 6 * pow(a, 2) * V) / (2 * a)),
                           "scale factor Euler-Lagrange equation"});
  return sys;
}

ODESystem frw_lapse_system(const ModelConfig& cfg) {
  cfg.validate();
  if (cfg.lapse != LapseMode::Dynamical) throw ConfigError("the lapse system requires a dynamical lapse");
  const auto& s = frw_symbols();
  Expr a(s.a), ad(s.adot), pd(s.phidot), phi(s.phi), N(s.N), Nd(s.Ndot), k(cfg.k);
  Expr V = cfg.potential.at(phi);
  Expr dV = cfg.potential.derivative(phi);
  ODESystem sys{"lapse", frw_context(true), {}, {}, side_conditions(cfg, true), {s.N}};
  sys.equations.push_back({s.phi, s.phiddot, normalize((-3 * N * ad * pd + a * Nd * pd - pow(N, 3) * a * dV) / (a * N)),
                           "Klein-Gordon equation"});
  sys.equations.push_back({s.a, s.addot, normalize((Nd * ad + 2 * pow(N, 3) * a * V - 2 * N * a * pow(pd, 2)) / N),
                           "second Einstein equation"});
  sys.constraints.push_back(
      normalize(pow(ad, 2) + pow(N, 2) * k - pow(a, 2) * pow(pd, 2) - 2 * pow(N, 2) * pow(a, 2) * V));
  return sys;
}

Lagrangian lagrangian(const ModelConfig& cfg) {
  cfg.validate();
  const auto& s = frw_symbols();
  Expr a(s.a), ad(s.adot), pd(s.phidot), phi(s.phi), N(s.N), k(cfg.k);
  Expr V = cfg.potential.at(phi);
  Rational half(1, 2);
  if (cfg.lapse == LapseMode::Unit) {
    Expr L = -Expr(half) * a * pow(ad, 2) + Expr(half) * k * a + Expr(half) * pow(a, 3) * pow(pd, 2) - pow(a, 3) * V;
    return {frw_context(false), normalize(L)};
  }
  Expr L = -Expr(half) * a * pow(ad, 2) / N + Expr(half) * k * N * a + Expr(half) * pow(a, 3) * pow(pd, 2) / N -
           N * pow(a, 3) * V;
  return {frw_context(true), normalize(L)};
}

Expr euler_lagrange(const Lagrangian& L, Symbol u) {
  const JetContext& ctx = L.context;
  if (!ctx.is_dependent(u)) throw ContextMismatch("'" + symbol_name(u) + "' is not a dependent of the Lagrangian");
  Expr momentum = differentiate(L.L, ctx.jet(u, 1));
  return normalize(differentiate(L.L, u) - total_derivative(momentum, ctx));
}

SolvedEquation solve_for_leading(const Expr& e, Symbol dependent, Symbol leading, std::string label) {
  Expr coefficient = differentiate(e, leading);
  if (coefficient.depends_on(leading) || is_zero(coefficient)) {
    throw NotPolynomial("'" + symbol_name(leading) + "' does not occur linearly");
  }
  Binding drop;
  drop.set(leading, Expr(0));
  Expr rest = substitute(e, drop);
  return {dependent, leading, normalize(-rest / coefficient), std::move(label)};
}

}  // namespace liefrw
