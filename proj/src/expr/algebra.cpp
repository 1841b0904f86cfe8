#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>

#include "canonical.hpp"
#include "node.hpp"

namespace liefrw {

using detail::Monomial;
using detail::Poly;
using detail::RatFunc;
using detail::to_canon;
using detail::to_expr;

Expr normalize(const Expr& e) { return to_expr(to_canon(e)); }

Expr differentiate(const Expr& e, Symbol v) {
  if (!e.depends_on(v)) return Expr(0);
  return to_expr(detail::rf_diff(to_canon(e), v));
}

Expr differentiate(const Expr& e, Symbol v, int times) {
  RatFunc r = to_canon(e);
  for (int i = 0; i < times && !r.is_zero(); ++i) r = detail::rf_diff(r, v);
  return to_expr(r);
}

Binding& Binding::set(Symbol s, Expr value) {
  variables_.insert_or_assign(s, std::move(value));
  return *this;
}

Binding& Binding::set(FunctionRef f, std::vector<Symbol> params, Expr body) {
  if (params.size() != function_params(f).size()) {
    throw Error("binding for '" + function_name(f) + "' has the wrong number of parameters");
  }
  functions_.insert_or_assign(f, FunctionBody{std::move(params), std::move(body)});
  return *this;
}

Binding& Binding::set(FunctionRef f, Expr body) { return set(f, function_params(f), std::move(body)); }

const Expr* Binding::find(Symbol s) const {
  auto it = variables_.find(s);
  return it == variables_.end() ? nullptr : &it->second;
}

const Binding::FunctionBody* Binding::find(FunctionRef f) const {
  auto it = functions_.find(f);
  return it == functions_.end() ? nullptr : &it->second;
}

Expr substitute(const Expr& e, const Binding& b) { return to_expr(to_canon(e, &b)); }

// ---------------------------------------------------------------------------
// Zero test with numeric guard

namespace {

std::atomic<bool> g_zero_guard{true};

std::uint64_t guard_seed() {
  if (const char* s = std::getenv("LIEFRW_SEED")) {
    char* end = nullptr;
    auto v = std::strtoull(s, &end, 10);
    if (end != s) return v;
  }
  return 20240611ULL;
}

struct Magnitude {
  double value;
  double scale;
};

// Random smooth rule f(x) = c0 * exp(sum c_i x_i), closed under partials.
struct GuardFunctions {
  std::uint64_t seed;
  std::vector<double> coefficients(std::uint32_t fid, std::size_t arity) const {
    std::mt19937_64 rng(seed ^ (0x51ed270b27f1ULL * (fid + 1)));
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    std::uniform_real_distribution<double> c0(0.5, 1.5);
    std::vector<double> out{c0(rng)};
    for (std::size_t i = 0; i < arity; ++i) out.push_back(c(rng));
    return out;
  }
};

Magnitude magnitude(const Expr& e, const std::map<std::uint32_t, double>& values, const GuardFunctions& fns) {
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      double v = e.value().get_d();
      return {v, std::abs(v)};
    }
    case Expr::Kind::Variable: {
      double v = values.at(e.symbol().id);
      return {v, std::abs(v)};
    }
    case Expr::Kind::Sum: {
      Magnitude m{0.0, 0.0};
      for (const Expr& c : e.children()) {
        Magnitude x = magnitude(c, values, fns);
        m.value += x.value;
        m.scale += x.scale;
      }
      return m;
    }
    case Expr::Kind::Product: {
      Magnitude m{1.0, 1.0};
      for (const Expr& c : e.children()) {
        Magnitude x = magnitude(c, values, fns);
        m.value *= x.value;
        m.scale *= x.scale;
      }
      return m;
    }
    case Expr::Kind::Power: {
      Magnitude b = magnitude(e.children()[0], values, fns);
      int n = e.exponent();
      if (b.value == 0.0 && n < 0) throw DomainError("division by zero");
      double v = std::pow(b.value, n);
      double amplification = b.scale / std::max(std::abs(b.value), 1e-300);
      return {v, std::abs(v) * std::pow(std::max(1.0, amplification), std::abs(n))};
    }
    case Expr::Kind::Exp: {
      Magnitude u = magnitude(e.children()[0], values, fns);
      double v = std::exp(u.value);
      return {v, std::abs(v) * std::max(1.0, u.scale)};
    }
    case Expr::Kind::Log: {
      Magnitude u = magnitude(e.children()[0], values, fns);
      if (u.value <= 0.0) throw DomainError("logarithm of a nonpositive value");
      double v = std::log(u.value);
      return {v, std::abs(v) + u.scale / u.value};
    }
    case Expr::Kind::Function: {
      auto coeffs = fns.coefficients(e.function().id, e.children().size());
      double exponent = 0.0;
      double prefactor = coeffs[0];
      double arg_scale = 0.0;
      for (std::size_t i = 0; i < e.children().size(); ++i) {
        Magnitude a = magnitude(e.children()[i], values, fns);
        exponent += coeffs[i + 1] * a.value;
        arg_scale += std::abs(coeffs[i + 1]) * a.scale;
        prefactor *= std::pow(coeffs[i + 1], e.orders()[i]);
      }
      double v = prefactor * std::exp(exponent);
      return {v, std::abs(v) * (1.0 + arg_scale)};
    }
  }
  return {0.0, 0.0};
}

void guard_zero_claim(const Expr& e) {
  GuardFunctions fns{guard_seed() ^ e.hash()};
  std::mt19937_64 rng(fns.seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  constexpr int kPoints = 20;
  for (int i = 0; i < kPoints; ++i) {
    std::map<std::uint32_t, double> values;
    for (std::uint32_t id : e.free_symbols()) values[id] = dist(rng);
    try {
      Magnitude m = magnitude(e, values, fns);
      if (!std::isfinite(m.value) || !std::isfinite(m.scale)) continue;
      if (std::abs(m.value) > 1e-8 * std::max(1.0, m.scale)) {
        throw NormalizationInconsistency("normal form is zero but the expression evaluates to " +
                                         std::to_string(m.value) + ": " + render(e));
      }
    } catch (const DomainError&) {
      continue;
    }
  }
}

}  // namespace

void set_zero_guard(bool enabled) { g_zero_guard = enabled; }
bool zero_guard_enabled() { return g_zero_guard; }

bool is_zero(const Expr& e) {
  bool zero = to_canon(e).is_zero();
  if (zero && g_zero_guard && !e.node()->normalized) guard_zero_claim(e);
  return zero;
}

// ---------------------------------------------------------------------------
// Coefficient collection

bool GradedLexGreater::operator()(const std::vector<int>& lhs, const std::vector<int>& rhs) const {
  int dl = 0;
  int dr = 0;
  for (int e : lhs) dl += e;
  for (int e : rhs) dr += e;
  if (dl != dr) return dl > dr;
  return lhs > rhs;
}

Collected::Collected(std::vector<Symbol> vars, std::map<std::vector<int>, Expr, GradedLexGreater> terms)
    : vars_(std::move(vars)), terms_(std::move(terms)) {}

Expr Collected::coefficient(const std::vector<int>& exponents) const {
  auto it = terms_.find(exponents);
  return it == terms_.end() ? Expr(0) : it->second;
}

Expr Collected::monomial(const std::vector<int>& exponents) const {
  std::vector<Expr> factors;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (exponents[i] != 0) factors.push_back(pow(Expr(vars_[i]), exponents[i]));
  }
  return Expr::product(std::move(factors));
}

Expr Collected::reassemble() const {
  std::vector<Expr> terms;
  for (const auto& [exps, coeff] : terms_) terms.push_back(monomial(exps) * coeff);
  return normalize(Expr::sum(std::move(terms)));
}

Collected collect(const Expr& e, const std::vector<Symbol>& vars) {
  RatFunc r = to_canon(e);
  auto mentions = [&](const Expr& x) {
    return std::any_of(vars.begin(), vars.end(), [&](Symbol v) { return x.depends_on(v); });
  };
  for (const auto& [f, k] : r.den) {
    if (mentions(detail::to_expr(RatFunc{f, {}}))) throw NotPolynomial("collected variable occurs in a denominator");
  }
  std::map<std::vector<int>, Poly, GradedLexGreater> buckets;
  for (const auto& [m, c] : r.num) {
    std::vector<int> exps(vars.size(), 0);
    Monomial rest;
    rest.exp_arg = m.exp_arg;
    if (m.exp_arg && mentions(*m.exp_arg)) throw NotPolynomial("collected variable occurs under exp");
    for (const auto& [atom, power] : m.factors) {
      if (atom.kind() == Expr::Kind::Variable) {
        auto it = std::find(vars.begin(), vars.end(), atom.symbol());
        if (it != vars.end()) {
          if (power < 0) throw NotPolynomial("collected variable occurs with a negative power");
          exps[static_cast<std::size_t>(it - vars.begin())] = power;
          continue;
        }
      } else if (mentions(atom)) {
        throw NotPolynomial("collected variable occurs inside " + render(atom));
      }
      rest.factors.emplace_back(atom, power);
    }
    auto& bucket = buckets[exps];
    bucket.emplace(std::move(rest), c);
  }
  std::map<std::vector<int>, Expr, GradedLexGreater> terms;
  for (auto& [exps, poly] : buckets) {
    Expr coeff = to_expr(RatFunc{std::move(poly), r.den});
    if (!coeff.is_constant(0)) terms.emplace(exps, coeff);
  }
  return Collected(vars, std::move(terms));
}

// ---------------------------------------------------------------------------

std::optional<Expr> exact_quotient(const Expr& num, const Expr& den) {
  RatFunc n = to_canon(num);
  RatFunc q = detail::rf_mul(n, detail::rf_inv(to_canon(den)));
  for (const auto& [f, k] : q.den) {
    int have = 0;
    for (const auto& [g, kg] : n.den) {
      if (to_expr(RatFunc{g, {}}) == to_expr(RatFunc{f, {}})) have = kg;
    }
    if (k > have) return std::nullopt;
  }
  return to_expr(q);
}

Expr reduce_modulo(const Expr& e, const Expr& relation) {
  RatFunc rel = to_canon(relation);
  if (!rel.den.empty()) throw NotPolynomial("relation must be a polynomial");
  if (rel.is_zero()) return normalize(e);
  // Clear the monomial content of the relation; what remains is the
  // primitive divisor whose multiples are removed.
  RatFunc rel_inv = detail::rf_inv(rel);
  if (rel_inv.den.empty()) return Expr(0);  // the relation is a nonvanishing monomial
  const Poly divisor = rel_inv.den.front().first;
  RatFunc value = to_canon(e);
  auto quotient = detail::poly_exact_div(value.num, divisor);
  if (quotient) return Expr(0);
  // Division remainder with respect to the single divisor, which is a
  // Groebner basis of the ideal it generates.
  // Work in non-negative exponents; the shift is a unit and is undone on
  // the remainder.
  std::map<Expr, int> lowest;
  for (const auto& [m, c] : value.num) {
    for (const auto& [atom, power] : m.factors) {
      if (power < 0) lowest[atom] = std::min(lowest[atom], power);
    }
  }
  Poly shift_poly;
  Monomial shift;
  for (const auto& [atom, power] : lowest) shift.factors.emplace_back(atom, -power);
  shift_poly.emplace(shift, Rational(1));
  Poly remainder;
  Poly work = detail::poly_mul(value.num, shift_poly);
  const auto& lead = *divisor.begin();
  for (int steps = 0; !work.empty() && steps < 20000; ++steps) {
    auto top = *work.begin();
    RatFunc probe;
    probe.num.emplace(top.first, Rational(1));
    Poly lead_poly;
    lead_poly.emplace(lead.first, lead.second);
    auto t = detail::poly_exact_div(probe.num, lead_poly);
    bool divisible = t && t->size() == 1 &&
                     std::none_of(t->begin()->first.factors.begin(), t->begin()->first.factors.end(),
                                  [](const auto& f) { return f.second < 0; });
    if (divisible) {
      Poly scaled = detail::poly_mul(*t, divisor);
      for (auto& [m, c] : scaled) c *= -top.second;
      for (const auto& [m, c] : scaled) {
        auto [it, inserted] = work.try_emplace(m, c);
        if (!inserted) {
          it->second += c;
          if (it->second == 0) work.erase(it);
        }
      }
    } else {
      remainder.emplace(top.first, top.second);
      work.erase(work.begin());
    }
  }
  Poly unshift;
  for (auto& f : shift.factors) f.second = -f.second;
  unshift.emplace(shift, Rational(1));
  return to_expr(RatFunc{detail::poly_mul(remainder, unshift), value.den});
}

std::vector<Expr> nonvanishing_conditions(const Expr& e) {
  RatFunc r = to_canon(e);
  std::vector<Expr> out;
  for (const auto& [m, c] : r.num) {
    for (const auto& [atom, power] : m.factors) {
      if (power < 0 && std::find(out.begin(), out.end(), atom) == out.end()) out.push_back(atom);
    }
  }
  for (const auto& [f, k] : r.den) out.push_back(to_expr(RatFunc{f, {}}));
  return out;
}

std::vector<std::pair<Expr, Rational>> linear_terms(const Expr& e) {
  RatFunc r = to_canon(e);
  if (!r.den.empty()) throw NotPolynomial("expression has a non-monomial denominator");
  std::vector<std::pair<Expr, Rational>> out;
  for (const auto& [m, c] : r.num) out.emplace_back(detail::monomial_expr(m), c);
  return out;
}

std::optional<Rational> constant_ratio(const Expr& e, const Expr& reference) {
  RatFunc num = to_canon(e);
  if (num.is_zero()) return Rational(0);
  RatFunc ref = to_canon(reference);
  if (ref.is_zero()) return std::nullopt;
  RatFunc q = detail::rf_mul(num, detail::rf_inv(ref));
  if (!q.den.empty() || q.num.size() != 1 || !q.num.begin()->first.is_one()) return std::nullopt;
  return q.num.begin()->second;
}

}  // namespace liefrw
