#include "canonical.hpp"

#include <algorithm>
#include <numeric>

#include "node.hpp"

namespace liefrw::detail {
namespace {

constexpr int kDivisionStepLimit = 20000;

void add_term(Poly& p, const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = p.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) p.erase(it);
  }
}

Poly poly_one() {
  Poly p;
  p.emplace(Monomial{}, Rational(1));
  return p;
}

bool is_one(const Poly& p) { return p.size() == 1 && p.begin()->first.is_one() && p.begin()->second == 1; }

Expr add_exp_args(const std::optional<Expr>& u, const std::optional<Expr>& v, int sign_v) {
  RatFunc a = u ? to_canon(*u) : RatFunc{};
  RatFunc b = v ? to_canon(*v) : RatFunc{};
  return to_expr(rf_add(a, rf_scale(b, Rational(sign_v))));
}

std::optional<Expr> nonzero(Expr e) {
  if (e.is_constant(0)) return std::nullopt;
  return e;
}

Monomial mono_combine(const Monomial& a, const Monomial& b, int sign_b) {
  Monomial r;
  r.factors.reserve(a.factors.size() + b.factors.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
      r.factors.push_back(a.factors[i++]);
    } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
      r.factors.emplace_back(b.factors[j].first, sign_b * b.factors[j].second);
      ++j;
    } else {
      int e = a.factors[i].second + sign_b * b.factors[j].second;
      if (e != 0) r.factors.emplace_back(a.factors[i].first, e);
      ++i;
      ++j;
    }
  }
  if (a.exp_arg && !b.exp_arg) {
    r.exp_arg = a.exp_arg;
  } else if (!a.exp_arg && b.exp_arg && sign_b == 1) {
    r.exp_arg = b.exp_arg;
  } else if (a.exp_arg || b.exp_arg) {
    r.exp_arg = nonzero(add_exp_args(a.exp_arg, b.exp_arg, sign_b));
  }
  return r;
}

Monomial mono_mul(const Monomial& a, const Monomial& b) { return mono_combine(a, b, 1); }
Monomial mono_div(const Monomial& a, const Monomial& b) { return mono_combine(a, b, -1); }

Monomial mono_pow(const Monomial& m, int n) {
  Monomial r;
  if (n == 0) return r;
  for (const auto& [atom, e] : m.factors) r.factors.emplace_back(atom, e * n);
  if (m.exp_arg) r.exp_arg = to_expr(rf_scale(to_canon(*m.exp_arg), Rational(n)));
  return r;
}

Poly poly_scale(const Poly& p, const Monomial& m, const Rational& c) {
  Poly r;
  if (c == 0) return r;
  for (const auto& [mono, coef] : p) add_term(r, m.is_one() ? mono : mono_mul(mono, m), coef * c);
  return r;
}

Poly poly_add(const Poly& a, const Poly& b) {
  Poly r = a;
  for (const auto& [m, c] : b) add_term(r, m, c);
  return r;
}

Poly poly_pow(const Poly& p, int n) {
  Poly r = poly_one();
  for (int i = 0; i < n; ++i) r = poly_mul(r, p);
  return r;
}

bool has_negative_exponent(const Monomial& m) {
  return std::any_of(m.factors.begin(), m.factors.end(), [](const auto& f) { return f.second < 0; });
}

// Monomial whose exponents are the per-atom minimum over all terms (absent
// atoms count as exponent zero).
Monomial poly_content(const Poly& p) {
  Monomial content;
  if (p.empty()) return content;
  std::map<Expr, int> mins;
  bool first = true;
  for (const auto& [m, c] : p) {
    std::map<Expr, int> here;
    for (const auto& [atom, e] : m.factors) here[atom] = e;
    if (first) {
      mins = here;
      first = false;
    } else {
      for (auto& [atom, e] : mins) {
        auto it = here.find(atom);
        e = std::min(e, it == here.end() ? 0 : it->second);
      }
      for (const auto& [atom, e] : here) {
        if (!mins.count(atom)) mins[atom] = std::min(0, e);
      }
    }
  }
  for (const auto& [atom, e] : mins) {
    if (e != 0) content.factors.emplace_back(atom, e);
  }
  const auto& first_exp = p.begin()->first.exp_arg;
  if (first_exp && std::all_of(p.begin(), p.end(), [&](const auto& t) { return t.first.exp_arg == first_exp; })) {
    content.exp_arg = first_exp;
  }
  return content;
}

// Shift exponents so that every atom exponent is non-negative; returns the
// multiplier used.
Monomial nonnegative_shift(const Poly& p) {
  Monomial content = poly_content(p);
  Monomial shift;
  for (const auto& [atom, e] : content.factors) {
    if (e < 0) shift.factors.emplace_back(atom, -e);
  }
  return shift;
}

struct FactorSplit {
  Rational coefficient;
  Monomial content;
  Poly primitive;  // one when p is a single term
};

FactorSplit split_factor(const Poly& p) {
  FactorSplit s;
  s.content = poly_content(p);
  Monomial inverse = mono_pow(s.content, -1);
  Poly q;
  for (const auto& [m, c] : p) add_term(q, mono_mul(m, inverse), c);
  s.coefficient = q.begin()->second;
  Rational inv = 1 / s.coefficient;
  for (auto& [m, c] : q) c *= inv;
  s.primitive = std::move(q);
  return s;
}

int compare_poly(const Poly& a, const Poly& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
    if (auto c = grlex(ia->first, ib->first); c != 0) return c < 0 ? -1 : 1;
    if (int c = cmp(ia->second, ib->second); c != 0) return c;
  }
  if (ia == a.end() && ib == b.end()) return 0;
  return ia == a.end() ? -1 : 1;
}

using DenList = std::vector<std::pair<Poly, int>>;

void insert_factor(DenList& den, const Poly& f, int k) {
  if (k == 0) return;
  auto it = std::lower_bound(den.begin(), den.end(), f,
                             [](const auto& entry, const Poly& key) { return compare_poly(entry.first, key) < 0; });
  if (it != den.end() && compare_poly(it->first, f) == 0) {
    it->second += k;
    if (it->second == 0) den.erase(it);
  } else {
    den.insert(it, {f, k});
  }
}

const int* find_factor(const DenList& den, const Poly& f) {
  for (const auto& [g, k] : den) {
    if (compare_poly(g, f) == 0) return &k;
  }
  return nullptr;
}

Poly expand_den(const DenList& den) {
  Poly r = poly_one();
  for (const auto& [f, k] : den) r = poly_mul(r, poly_pow(f, k));
  return r;
}

void reduce(RatFunc& r) {
  if (r.num.empty()) {
    r.den.clear();
    return;
  }
  for (auto it = r.den.begin(); it != r.den.end();) {
    while (it->second > 0) {
      auto q = poly_exact_div(r.num, it->first);
      if (!q) break;
      r.num = std::move(*q);
      --it->second;
    }
    it = it->second == 0 ? r.den.erase(it) : std::next(it);
  }
}

RatFunc poly_diff(const Poly& p, Symbol v);

RatFunc atom_diff(const Expr& atom, Symbol v) {
  switch (atom.kind()) {
    case Expr::Kind::Variable:
      return atom.symbol() == v ? rf_constant(1) : RatFunc{};
    case Expr::Kind::Log: {
      RatFunc u = to_canon(atom.children()[0]);
      return rf_mul(rf_diff(u, v), rf_inv(u));
    }
    case Expr::Kind::Function: {
      RatFunc result;
      auto args = atom.children();
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i].depends_on(v)) continue;
        std::vector<int> orders(atom.orders().begin(), atom.orders().end());
        ++orders[i];
        Node n;
        n.kind = Expr::Kind::Function;
        n.id = atom.function().id;
        n.orders = std::move(orders);
        n.children.assign(args.begin(), args.end());
        n.normalized = true;
        RatFunc partial = rf_atom(make_node(std::move(n)));
        result = rf_add(result, rf_mul(partial, rf_diff(to_canon(args[i]), v)));
      }
      return result;
    }
    default:
      throw Error("internal: not an atom");
  }
}

RatFunc mono_diff(const Monomial& m, Symbol v) {
  RatFunc result;
  for (std::size_t j = 0; j < m.factors.size(); ++j) {
    const auto& [atom, e] = m.factors[j];
    if (!atom.depends_on(v)) continue;
    Monomial rest = m;
    if (e == 1) {
      rest.factors.erase(rest.factors.begin() + static_cast<std::ptrdiff_t>(j));
    } else {
      rest.factors[j].second = e - 1;
    }
    RatFunc lead;
    lead.num.emplace(std::move(rest), Rational(e));
    result = rf_add(result, rf_mul(lead, atom_diff(atom, v)));
  }
  if (m.exp_arg && m.exp_arg->depends_on(v)) {
    RatFunc self;
    self.num.emplace(m, Rational(1));
    result = rf_add(result, rf_mul(self, rf_diff(to_canon(*m.exp_arg), v)));
  }
  return result;
}

RatFunc poly_diff(const Poly& p, Symbol v) {
  RatFunc result;
  for (const auto& [m, c] : p) {
    bool depends =
        (m.exp_arg && m.exp_arg->depends_on(v)) ||
        std::any_of(m.factors.begin(), m.factors.end(), [&](const auto& f) { return f.first.depends_on(v); });
    if (!depends) continue;
    result = rf_add(result, rf_scale(mono_diff(m, v), c));
  }
  return result;
}

Expr make_atom(Expr::Kind kind, std::uint32_t id, std::vector<int> orders, std::vector<Expr> children) {
  Node n;
  n.kind = kind;
  n.id = id;
  n.orders = std::move(orders);
  n.children = std::move(children);
  n.normalized = true;
  return make_node(std::move(n));
}

Expr poly_expr(const Poly& p) {
  std::vector<Expr> terms;
  terms.reserve(p.size());
  for (const auto& [m, c] : p) {
    Expr mono = monomial_expr(m);
    if (c == 1) {
      terms.push_back(mono);
    } else if (m.is_one()) {
      terms.emplace_back(c);
    } else {
      std::vector<Expr> factors{Expr(c)};
      if (mono.kind() == Expr::Kind::Product) {
        factors.insert(factors.end(), mono.children().begin(), mono.children().end());
      } else {
        factors.push_back(mono);
      }
      Node n;
      n.kind = Expr::Kind::Product;
      n.children = std::move(factors);
      n.normalized = true;
      terms.push_back(make_node(std::move(n)));
    }
  }
  if (terms.empty()) return Expr(0);
  if (terms.size() == 1) return terms.front();
  Node n;
  n.kind = Expr::Kind::Sum;
  n.children = std::move(terms);
  n.normalized = true;
  return make_node(std::move(n));
}

}  // namespace

int Monomial::degree() const {
  int d = 0;
  for (const auto& f : factors) d += f.second;
  return d;
}

std::strong_ordering grlex(const Monomial& a, const Monomial& b) {
  using so = std::strong_ordering;
  int da = a.degree();
  int db = b.degree();
  if (da != db) return da > db ? so::less : so::greater;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.factors.size() || j < b.factors.size()) {
    if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
      return a.factors[i].second > 0 ? so::less : so::greater;
    }
    if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
      return b.factors[j].second > 0 ? so::greater : so::less;
    }
    if (a.factors[i].second != b.factors[j].second) {
      return a.factors[i].second > b.factors[j].second ? so::less : so::greater;
    }
    ++i;
    ++j;
  }
  if (a.exp_arg.has_value() != b.exp_arg.has_value()) return a.exp_arg ? so::greater : so::less;
  if (a.exp_arg) return *a.exp_arg <=> *b.exp_arg;
  return so::equal;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) add_term(r, mono_mul(ma, mb), ca * cb);
  }
  return r;
}

std::optional<Poly> poly_exact_div(const Poly& num, const Poly& den) {
  if (num.empty()) return Poly{};
  Monomial shift = nonnegative_shift(num);
  Poly r = shift.factors.empty() ? num : poly_scale(num, shift, 1);
  Poly q;
  const auto& [lead_mono, lead_coef] = *den.begin();
  for (int steps = 0; !r.empty(); ++steps) {
    if (steps > kDivisionStepLimit) return std::nullopt;
    const auto& [m, c] = *r.begin();
    Monomial t = mono_div(m, lead_mono);
    if (has_negative_exponent(t)) return std::nullopt;
    Rational coef = c / lead_coef;
    add_term(q, t, coef);
    r = poly_add(r, poly_scale(den, t, -coef));
  }
  if (!shift.factors.empty()) q = poly_scale(q, mono_pow(shift, -1), 1);
  return q;
}

RatFunc rf_constant(const Rational& q) {
  RatFunc r;
  if (q != 0) r.num.emplace(Monomial{}, q);
  return r;
}

RatFunc rf_atom(const Expr& atom) {
  RatFunc r;
  Monomial m;
  m.factors.emplace_back(atom, 1);
  r.num.emplace(std::move(m), Rational(1));
  return r;
}

RatFunc rf_scale(const RatFunc& r, const Rational& q) {
  if (q == 0) return {};
  RatFunc out = r;
  for (auto& [m, c] : out.num) c *= q;
  return out;
}

RatFunc rf_add(const RatFunc& a, const RatFunc& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  RatFunc r;
  bool same = a.den.size() == b.den.size() &&
              std::equal(a.den.begin(), a.den.end(), b.den.begin(), [](const auto& x, const auto& y) {
                return x.second == y.second && compare_poly(x.first, y.first) == 0;
              });
  if (same) {
    r.num = poly_add(a.num, b.num);
    r.den = a.den;
  } else {
    DenList lcm = a.den;
    for (const auto& [f, k] : b.den) {
      const int* existing = find_factor(lcm, f);
      if (!existing) {
        insert_factor(lcm, f, k);
      } else if (*existing < k) {
        insert_factor(lcm, f, k - *existing);
      }
    }
    auto cofactor = [&](const DenList& den) {
      DenList missing;
      for (const auto& [f, k] : lcm) {
        const int* have = find_factor(den, f);
        int m = k - (have ? *have : 0);
        if (m > 0) missing.emplace_back(f, m);
      }
      return expand_den(missing);
    };
    r.num = poly_add(poly_mul(a.num, cofactor(a.den)), poly_mul(b.num, cofactor(b.den)));
    r.den = std::move(lcm);
  }
  reduce(r);
  return r;
}

RatFunc rf_mul(const RatFunc& a, const RatFunc& b) {
  if (a.is_zero() || b.is_zero()) return {};
  RatFunc r;
  r.num = poly_mul(a.num, b.num);
  r.den = a.den;
  for (const auto& [f, k] : b.den) insert_factor(r.den, f, k);
  if (!r.den.empty()) reduce(r);
  return r;
}

RatFunc rf_inv(const RatFunc& r) {
  if (r.is_zero()) throw DomainError("division by zero");
  FactorSplit s = split_factor(r.num);
  RatFunc out;
  out.num = poly_scale(expand_den(r.den), mono_pow(s.content, -1), 1 / s.coefficient);
  if (!is_one(s.primitive)) out.den.emplace_back(std::move(s.primitive), 1);
  reduce(out);
  return out;
}

RatFunc rf_pow(const RatFunc& r, int n) {
  if (n == 0) return rf_constant(1);
  if (n < 0) return rf_pow(rf_inv(r), -n);
  if (r.num.size() == 1 && r.den.empty()) {
    const auto& [m, c] = *r.num.begin();
    RatFunc out;
    Rational cp = 1;
    for (int i = 0; i < n; ++i) cp *= c;
    out.num.emplace(mono_pow(m, n), cp);
    return out;
  }
  RatFunc result = rf_constant(1);
  RatFunc base = r;
  while (n > 0) {
    if (n & 1) result = rf_mul(result, base);
    n >>= 1;
    if (n > 0) base = rf_mul(base, base);
  }
  return result;
}

RatFunc rf_exp(const RatFunc& r) {
  if (r.is_zero()) return rf_constant(1);
  RatFunc out;
  Monomial m;
  m.exp_arg = to_expr(r);
  out.num.emplace(std::move(m), Rational(1));
  return out;
}

RatFunc rf_log(const RatFunc& r) {
  if (r.is_zero()) throw DomainError("logarithm of zero");
  if (r.den.empty() && r.num.size() == 1) {
    const auto& [m, c] = *r.num.begin();
    if (c == 1 && m.is_one()) return {};
    if (c == 1 && m.factors.empty() && m.exp_arg) return to_canon(*m.exp_arg);
  }
  return rf_atom(make_atom(Expr::Kind::Log, 0, {}, {to_expr(r)}));
}

RatFunc rf_diff(const RatFunc& r, Symbol v) {
  RatFunc d_num = poly_diff(r.num, v);
  if (r.den.empty()) return d_num;
  RatFunc inv_den;
  inv_den.num = poly_one();
  inv_den.den = r.den;
  RatFunc result = rf_mul(d_num, inv_den);
  for (const auto& [f, k] : r.den) {
    RatFunc df = poly_diff(f, v);
    if (df.is_zero()) continue;
    RatFunc term;
    term.num = r.num;
    term.den = r.den;
    insert_factor(term.den, f, 1);
    result = rf_add(result, rf_scale(rf_mul(term, df), Rational(-k)));
  }
  return result;
}

/// 1 / e^k with the factors of `e` kept apart, so (u + 1)^-2 yields the
/// denominator factor u + 1 twice rather than one expanded polynomial.
RatFunc canon_inverse(const Expr& e, int k, const Binding* binding) {
  switch (e.kind()) {
    case Expr::Kind::Product: {
      RatFunc r = rf_constant(1);
      for (const Expr& c : e.children()) r = rf_mul(r, canon_inverse(c, k, binding));
      return r;
    }
    case Expr::Kind::Power:
      if (e.exponent() > 0) return canon_inverse(e.children()[0], k * e.exponent(), binding);
      return rf_pow(to_canon(e.children()[0], binding), -e.exponent() * k);
    default:
      return rf_pow(rf_inv(to_canon(e, binding)), k);
  }
}

RatFunc to_canon(const Expr& e, const Binding* binding) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return rf_constant(e.value());
    case Expr::Kind::Variable:
      if (binding) {
        if (const Expr* value = binding->find(e.symbol())) return to_canon(*value);
      }
      return rf_atom(e);
    case Expr::Kind::Sum: {
      RatFunc r;
      for (const Expr& c : e.children()) r = rf_add(r, to_canon(c, binding));
      return r;
    }
    case Expr::Kind::Product: {
      RatFunc r = rf_constant(1);
      for (const Expr& c : e.children()) {
        r = rf_mul(r, to_canon(c, binding));
        if (r.is_zero()) break;
      }
      return r;
    }
    case Expr::Kind::Power:
      if (e.exponent() < 0) return canon_inverse(e.children()[0], -e.exponent(), binding);
      return rf_pow(to_canon(e.children()[0], binding), e.exponent());
    case Expr::Kind::Exp:
      return rf_exp(to_canon(e.children()[0], binding));
    case Expr::Kind::Log:
      if (e.node()->normalized && !binding) return rf_atom(e);
      return rf_log(to_canon(e.children()[0], binding));
    case Expr::Kind::Function: {
      const Binding::FunctionBody* body = binding ? binding->find(e.function()) : nullptr;
      if (!body && e.node()->normalized) {
        bool touched = false;
        if (binding) {
          for (const Expr& arg : e.children()) {
            for (std::uint32_t id : arg.free_symbols()) touched = touched || binding->find(Symbol{id});
          }
        }
        if (!touched) return rf_atom(e);
      }
      std::vector<Expr> args;
      args.reserve(e.children().size());
      for (const Expr& arg : e.children()) args.push_back(to_expr(to_canon(arg, binding)));
      if (!body) {
        return rf_atom(make_atom(Expr::Kind::Function, e.function().id,
                                 std::vector<int>(e.orders().begin(), e.orders().end()), std::move(args)));
      }
      if (body->params.size() != args.size()) {
        throw Error("binding for '" + function_name(e.function()) + "' has the wrong number of parameters");
      }
      RatFunc derived = to_canon(body->body);
      for (std::size_t i = 0; i < args.size(); ++i) {
        for (int k = 0; k < e.orders()[i]; ++k) derived = rf_diff(derived, body->params[i]);
      }
      Binding inner;
      for (std::size_t i = 0; i < args.size(); ++i) inner.set(body->params[i], args[i]);
      return to_canon(to_expr(derived), &inner);
    }
  }
  return {};
}

Expr monomial_expr(const Monomial& m) {
  std::vector<Expr> factors;
  for (const auto& [atom, e] : m.factors) {
    if (e == 1) {
      factors.push_back(atom);
    } else {
      Node n;
      n.kind = Expr::Kind::Power;
      n.exponent = e;
      n.children = {atom};
      n.normalized = true;
      factors.push_back(make_node(std::move(n)));
    }
  }
  if (m.exp_arg) factors.push_back(make_atom(Expr::Kind::Exp, 0, {}, {*m.exp_arg}));
  if (factors.empty()) return Expr(1);
  if (factors.size() == 1) return factors.front();
  Node n;
  n.kind = Expr::Kind::Product;
  n.children = std::move(factors);
  n.normalized = true;
  return make_node(std::move(n));
}

Expr to_expr(const RatFunc& r) {
  Expr num = poly_expr(r.num);
  if (r.den.empty()) return num;
  std::vector<Expr> factors{num};
  for (const auto& [f, k] : r.den) {
    Node n;
    n.kind = Expr::Kind::Power;
    n.exponent = -k;
    n.children = {poly_expr(f)};
    n.normalized = true;
    factors.push_back(make_node(std::move(n)));
  }
  Node n;
  n.kind = Expr::Kind::Product;
  n.children = std::move(factors);
  n.normalized = true;
  return make_node(std::move(n));
}

}  // namespace liefrw::detail
