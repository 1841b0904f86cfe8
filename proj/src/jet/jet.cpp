#include "liefrw/jet.hpp"

#include <algorithm>

namespace liefrw {

JetContext::JetContext(Symbol independent, std::vector<Symbol> dependents, int order)
    : independent_(independent), dependents_(std::move(dependents)), order_(order) {
  if (order_ < 1 || order_ > 2) throw OrderOverflow("jet order must be 1 or 2");
  for (std::size_t i = 0; i < dependents_.size(); ++i) {
    Symbol u = dependents_[i];
    if (u == independent_ || jet_info(u))
      throw ContextMismatch("dependent '" + symbol_name(u) + "' is not a base variable");
    if (std::count(dependents_.begin(), dependents_.end(), u) > 1) {
      throw ContextMismatch("dependent '" + symbol_name(u) + "' listed twice");
    }
  }
  if (jet_info(independent_)) throw ContextMismatch("independent variable must be a base variable");
}

Symbol JetContext::jet(Symbol u, int k) const {
  if (!is_dependent(u)) throw ContextMismatch("'" + symbol_name(u) + "' is not a dependent of this context");
  if (k < 0 || k > order_) throw OrderOverflow("jet order " + std::to_string(k) + " exceeds the context order");
  return k == 0 ? u : jet_variable(u, independent_, k);
}

bool JetContext::is_dependent(Symbol s) const {
  return std::find(dependents_.begin(), dependents_.end(), s) != dependents_.end();
}

std::optional<int> JetContext::jet_order(Symbol s) const {
  if (s == independent_ || is_dependent(s)) return 0;
  auto info = jet_info(s);
  if (info && info->independent == independent_ && is_dependent(info->base) && info->order <= order_)
    return info->order;
  return std::nullopt;
}

std::optional<Symbol> JetContext::dependent_of(Symbol s) const {
  if (is_dependent(s)) return s;
  auto info = jet_info(s);
  if (info && info->independent == independent_ && is_dependent(info->base)) return info->base;
  return std::nullopt;
}

std::vector<Symbol> JetContext::base_variables() const {
  std::vector<Symbol> out{independent_};
  out.insert(out.end(), dependents_.begin(), dependents_.end());
  return out;
}

std::vector<Symbol> JetContext::jet_variables(int k) const {
  std::vector<Symbol> out;
  for (int order = 1; order <= std::min(k, order_); ++order) {
    for (Symbol u : dependents_) out.push_back(jet(u, order));
  }
  return out;
}

int JetContext::max_order(const Expr& e) const {
  int highest = 0;
  for (std::uint32_t id : e.free_symbols()) {
    Symbol s{id};
    auto info = jet_info(s);
    if (!info || info->independent != independent_ || !is_dependent(info->base)) continue;
    highest = std::max(highest, info->order);
  }
  return highest;
}

Expr total_derivative(const Expr& e, const JetContext& ctx) {
  if (ctx.max_order(e) >= ctx.order()) {
    throw OrderOverflow("total derivative would exceed jet order " + std::to_string(ctx.order()));
  }
  std::vector<Expr> terms{differentiate(e, ctx.independent())};
  for (Symbol u : ctx.dependents()) {
    for (int k = 0; k < ctx.order(); ++k) {
      Symbol uk = ctx.jet(u, k);
      if (!e.depends_on(uk)) continue;
      terms.push_back(Expr(ctx.jet(u, k + 1)) * differentiate(e, uk));
    }
  }
  return normalize(Expr::sum(std::move(terms)));
}

// ---------------------------------------------------------------------------

VectorField::VectorField(JetContext context, std::map<Symbol, Expr> coefficients) : context_(std::move(context)) {
  auto bases = context_.base_variables();
  for (auto& [s, c] : coefficients) {
    if (std::find(bases.begin(), bases.end(), s) == bases.end()) {
      throw ContextMismatch("'" + symbol_name(s) + "' is not a base coordinate of the context");
    }
    if (context_.max_order(c) > 0) throw ContextMismatch("vector field coefficients must not contain jet coordinates");
    Expr n = normalize(c);
    if (!n.is_constant(0)) coefficients_.emplace(s, n);
  }
}

Expr VectorField::coefficient(Symbol s) const {
  auto it = coefficients_.find(s);
  return it == coefficients_.end() ? Expr(0) : it->second;
}

Expr VectorField::apply_base(const Expr& e) const {
  std::vector<Expr> terms;
  for (const auto& [s, c] : coefficients_) {
    if (e.depends_on(s)) terms.push_back(c * differentiate(e, s));
  }
  return normalize(Expr::sum(std::move(terms)));
}

bool VectorField::is_zero() const { return coefficients_.empty(); }

namespace {

VectorField combine(const VectorField& lhs, const VectorField& rhs, int sign) {
  if (!(lhs.context() == rhs.context())) throw ContextMismatch("vector fields live in different contexts");
  std::map<Symbol, Expr> out = lhs.coefficients();
  for (const auto& [s, c] : rhs.coefficients()) {
    Expr scaled = sign == 1 ? c : -c;
    auto [it, inserted] = out.try_emplace(s, scaled);
    if (!inserted) it->second = it->second + scaled;
  }
  return VectorField(lhs.context(), std::move(out));
}

}  // namespace

VectorField operator+(const VectorField& lhs, const VectorField& rhs) { return combine(lhs, rhs, 1); }
VectorField operator-(const VectorField& lhs, const VectorField& rhs) { return combine(lhs, rhs, -1); }

VectorField operator*(const Expr& scale, const VectorField& v) {
  std::map<Symbol, Expr> out;
  for (const auto& [s, c] : v.coefficients()) out.emplace(s, scale * c);
  return VectorField(v.context(), std::move(out));
}

bool operator==(const VectorField& lhs, const VectorField& rhs) {
  return lhs.context() == rhs.context() && lhs.coefficients() == rhs.coefficients();
}

std::string render(const VectorField& v) {
  std::string out;
  for (Symbol s : v.context().base_variables()) {
    Expr c = v.coefficient(s);
    if (c.is_constant(0)) continue;
    std::string term = "(" + render(c) + ")*d/d" + symbol_name(s);
    out += out.empty() ? term : " + " + term;
  }
  return out.empty() ? "0" : out;
}

// ---------------------------------------------------------------------------

ProlongedField::ProlongedField(VectorField base, int order, std::map<Symbol, Expr> extended)
    : base_(std::move(base)), order_(order), extended_(std::move(extended)) {}

Expr ProlongedField::coefficient(Symbol s) const {
  auto it = extended_.find(s);
  if (it != extended_.end()) return it->second;
  return base_.coefficient(s);
}

ProlongedField prolong(const VectorField& v, int order) {
  const JetContext& ctx = v.context();
  if (order < 1 || order > ctx.order()) throw OrderOverflow("prolongation order must be 1 or 2");
  Expr dtau = total_derivative(v.tau(), ctx);
  std::map<Symbol, Expr> extended;
  for (Symbol u : ctx.dependents()) {
    Expr previous = v.coefficient(u);
    for (int k = 1; k <= order; ++k) {
      Expr eta = normalize(total_derivative(previous, ctx) - dtau * Expr(ctx.jet(u, k)));
      extended.emplace(ctx.jet(u, k), eta);
      previous = eta;
    }
  }
  return ProlongedField(v, order, std::move(extended));
}

Expr apply(const ProlongedField& pf, const Expr& e) {
  const JetContext& ctx = pf.base().context();
  if (ctx.max_order(e) > pf.order()) {
    throw OrderOverflow("expression involves jet coordinates above the prolongation order");
  }
  std::vector<Expr> terms;
  auto add = [&](Symbol s) {
    if (!e.depends_on(s)) return;
    Expr c = pf.coefficient(s);
    if (!c.is_constant(0)) terms.push_back(c * differentiate(e, s));
  };
  for (Symbol s : ctx.base_variables()) add(s);
  for (Symbol s : ctx.jet_variables(pf.order())) add(s);
  return normalize(Expr::sum(std::move(terms)));
}

}  // namespace liefrw
