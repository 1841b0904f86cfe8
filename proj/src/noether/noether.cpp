#include "liefrw/noether.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liefrw {

const Expr& Characteristic::of(Symbol u) const {
  for (const auto& [v, q] : components) {
    if (v == u) return q;
  }
  throw ContextMismatch("no characteristic component for '" + symbol_name(u) + "'");
}

std::string ConservationLaw::to_text() const {
  std::ostringstream out;
  out << "conservation law: D_t(P) = sum Q_u E_u(L)\n";
  out << "  characteristic:";
  for (const auto& [u, q] : characteristic.components) out << " Q_" << symbol_name(u) << " = " << render(q) << ";";
  out << "\n  candidate P = " << render(candidate) << "\n";
  out << "  factor = " << factor.get_str() << "\n";
  out << "  resolved P = " << render(flux) << "\n";
  if (!variational) out << "  warning: generator is not a variational symmetry\n";
  return out.str();
}

std::string ConservationLaw::to_key_values(const std::string& prefix) const {
  std::ostringstream out;
  out << prefix << "candidate = " << render(candidate) << "\n";
  out << prefix << "factor = " << factor.get_str() << "\n";
  out << prefix << "flux = " << render(flux) << "\n";
  out << prefix << "variational = " << (variational ? "true" : "false") << "\n";
  return out.str();
}

Expr variational_residual(const VectorField& g, const Lagrangian& L) {
  if (!(g.context() == L.context)) throw ContextMismatch("generator and Lagrangian use different jet contexts");
  Expr pr = apply(prolong(g, 1), L.L);
  return normalize(pr + L.L * total_derivative(g.tau(), L.context));
}

Characteristic characteristics(const VectorField& g) {
  const JetContext& ctx = g.context();
  Characteristic c;
  for (Symbol u : ctx.dependents()) {
    c.components.emplace_back(u, normalize(g.coefficient(u) - g.tau() * Expr(ctx.jet(u, 1))));
  }
  return c;
}

ConservationLaw verify_conservation_law(const Expr& P, const VectorField& g, const Lagrangian& L) {
  if (!(g.context() == L.context)) throw ContextMismatch("generator and Lagrangian use different jet contexts");
  const JetContext& ctx = L.context;
  if (ctx.max_order(P) > 1) throw OrderOverflow("flux must be first order");
  ConservationLaw law{Expr(0), normalize(P), 1, characteristics(g), L, Expr(0), true};
  law.variational = is_zero(variational_residual(g, L));
  std::vector<Expr> terms;
  for (const auto& [u, q] : law.characteristic.components) terms.push_back(q * euler_lagrange(L, u));
  law.source = normalize(Expr::sum(std::move(terms)));
  Expr dP = normalize(total_derivative(law.candidate, ctx));
  Expr defect = normalize(dP - law.source);
  if (is_zero(defect)) {
    law.flux = law.candidate;
    return law;
  }
  if (!is_zero(dP) && !is_zero(law.source)) {
    if (auto c = constant_ratio(law.source, dP); c && *c != 0) {
      law.factor = *c;
      law.flux = normalize(Expr(*c) * law.candidate);
      return law;
    }
  }
  throw NotConserved("D_t(P) - sum Q_u E_u(L) = " + render(defect), defect);
}

namespace {

struct FluxParts {
  Expr a, ad, pd, N, k, V;
};

FluxParts parts(const ModelConfig& cfg) {
  const auto& s = frw_symbols();
  return {Expr(s.a), Expr(s.adot), Expr(s.phidot), Expr(s.N), Expr(cfg.k), cfg.potential.in_phi()};
}

}  // namespace

Expr flux_candidate_P(const ModelConfig& cfg) {
  auto [a, ad, pd, N, k, V] = parts(cfg);
  return normalize(Expr(Rational(1, 2)) * a * (ad * ad + k - 2 * a * a * V - a * a * pd * pd));
}

Expr flux_printed_P(const ModelConfig& cfg) {
  auto [a, ad, pd, N, k, V] = parts(cfg);
  return normalize(Expr(Rational(1, 2)) * a * (ad * ad + k * a - 2 * pow(a, 3) * V - pow(a, 3) * pd * pd));
}

Expr flux_candidate_K(const ModelConfig& cfg) {
  auto [a, ad, pd, N, k, V] = parts(cfg);
  return normalize(a / (2 * N) * (ad * ad + N * N * k - 2 * N * N * a * a * V - a * a * pd * pd));
}

Expr conjugate_momentum(const ModelConfig& cfg) {
  if (cfg.lapse != LapseMode::Unit) throw ConfigError("the conjugate momentum check requires unit lapse");
  const auto& s = frw_symbols();
  // t and phi as functions of a.
  JetContext by_a(s.a, {s.t, s.phi}, 1);
  Expr ta(by_a.jet(s.t, 1)), phia(by_a.jet(s.phi, 1));
  Lagrangian L = lagrangian(cfg);
  Binding reparam;
  reparam.set(s.adot, 1 / ta);
  reparam.set(s.phidot, phia / ta);
  Expr Ltilde = normalize(ta * substitute(L.L, reparam));
  Expr momentum = differentiate(Ltilde, by_a.jet(s.t, 1));
  Binding back;
  back.set(by_a.jet(s.t, 1), 1 / Expr(s.adot));
  back.set(by_a.jet(s.phi, 1), Expr(s.phidot) / Expr(s.adot));
  return normalize(substitute(momentum, back));
}

Expr conjugate_momentum_check(const ModelConfig& cfg) {
  const auto& s = frw_symbols();
  JetContext ctx = frw_context(false);
  VectorField Y(ctx, {{s.t, Expr(1)}});
  ConservationLaw law = verify_conservation_law(flux_candidate_P(cfg), Y, lagrangian(cfg));
  return normalize(conjugate_momentum(cfg) - Expr(kMomentumFactor) * law.flux);
}

double numeric_conservation(const Trajectory& traj, const ConservationLaw& law,
                            const std::map<FunctionRef, NumericFunction>& functions) {
  auto series = evaluate_along(traj, law.flux, functions);
  double drift = 0.0;
  for (double v : series) drift = std::max(drift, std::abs(v - series.front()));
  return drift;
}

}  // namespace liefrw
