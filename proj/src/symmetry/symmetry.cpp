#include "liefrw/symmetry.hpp"

#include <algorithm>
#include <sstream>

namespace liefrw {

VectorField generator_X(const JetContext& ctx) {
  const auto& s = frw_symbols();
  return VectorField(ctx, {{ctx.independent(), Expr(ctx.independent())}, {s.phi, Expr(1)}});
}

VectorField generator_Y(const JetContext& ctx) { return VectorField(ctx, {{ctx.independent(), Expr(1)}}); }

VectorField generator_Z(const JetContext& ctx) {
  const auto& s = frw_symbols();
  return VectorField(ctx, {{s.a, Expr(s.a)}});
}

VectorField generator_W(const JetContext& ctx) { return generator_X(ctx) + generator_Y(ctx); }

VectorField named_generator(const std::string& name, const JetContext& ctx) {
  if (name == "X") return generator_X(ctx);
  if (name == "Y") return generator_Y(ctx);
  if (name == "Z") return generator_Z(ctx);
  if (name == "W") return generator_W(ctx);
  throw ConfigError("unknown generator '" + name + "' (expected X, Y, Z or W)");
}

GeneratorFamily GeneratorFamily::symbolic() { return {var("c1"), var("c2"), var("mu")}; }

VectorField GeneratorFamily::field(const JetContext& ctx) const {
  const auto& s = frw_symbols();
  Expr t(ctx.independent());
  return VectorField(ctx, {{ctx.independent(), mu * t + c2}, {s.a, c1 * Expr(s.a)}, {s.phi, mu}});
}

// ---------------------------------------------------------------------------

namespace {

void check_context(const VectorField& g, const JetContext& ctx) {
  if (!(g.context() == ctx)) throw ContextMismatch("generator and system use different jet contexts");
}

}  // namespace

SymmetryReport symmetry_residual(const VectorField& g, const ODESystem& sys, const std::string& generator_name) {
  check_context(g, sys.context);
  ProlongedField pr2 = prolong(g, 2);
  Binding shell = sys.on_shell();
  SymmetryReport report;
  report.generator = generator_name;
  report.system = sys.name;
  report.side_conditions = sys.side_conditions;
  report.verdict = true;
  report.constraints_preserved = true;
  for (const auto& eq : sys.equations) {
    Residual r;
    r.label = eq.label;
    r.off_shell = apply(pr2, eq.residual());
    r.on_shell = substitute(r.off_shell, shell);
    r.zero = is_zero(r.on_shell);
    report.verdict = report.verdict && r.zero;
    report.equations.push_back(std::move(r));
  }
  ProlongedField pr1 = prolong(g, 1);
  for (const Expr& c : sys.constraints) {
    Residual r;
    r.label = "constraint " + render(c) + " = 0";
    r.off_shell = apply(pr1, c);
    r.on_shell = reduce_modulo(r.off_shell, c);
    r.zero = is_zero(r.on_shell);
    report.constraints_preserved = report.constraints_preserved && r.zero;
    report.constraints.push_back(std::move(r));
  }
  return report;
}

Expr sequential_on_shell_residual(const VectorField& g, const ODESystem& sys, std::size_t equation,
                                  const std::vector<std::size_t>& elimination_order) {
  check_context(g, sys.context);
  Expr r = apply(prolong(g, 2), sys.equations.at(equation).residual());
  for (std::size_t i : elimination_order) {
    Binding one;
    one.set(sys.equations.at(i).leading, sys.equations.at(i).rhs);
    r = substitute(r, one);
  }
  return r;
}

std::string SymmetryReport::to_text() const {
  std::ostringstream out;
  out << "generator " << generator << " on " << system << " system: " << (verdict ? "symmetry" : "not a symmetry")
      << "\n";
  for (const auto& r : equations) {
    out << "  " << r.label << ": residual " << (r.zero ? "0" : render(r.on_shell)) << "\n";
  }
  for (const auto& r : constraints) {
    out << "  " << r.label << ": remainder " << (r.zero ? "0" : render(r.on_shell)) << "\n";
  }
  return out.str();
}

std::string SymmetryReport::to_key_values() const {
  std::ostringstream out;
  std::string prefix = generator + "." + system + ".";
  out << prefix << "verdict = " << (verdict ? "true" : "false") << "\n";
  for (std::size_t i = 0; i < equations.size(); ++i) {
    out << prefix << "equation" << i << ".residual = " << render(equations[i].on_shell) << "\n";
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    out << prefix << "constraint" << i << ".remainder = " << render(constraints[i].on_shell) << "\n";
  }
  out << prefix << "constraints_preserved = " << (constraints_preserved ? "true" : "false") << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

VectorField ansatz_field(const JetContext& ctx) {
  auto bases = ctx.base_variables();
  bool lapse = ctx.dependents().size() > 2;
  std::vector<std::string> names =
      lapse ? std::vector<std::string>{"tauN", "AN", "PhiN", "XiN"} : std::vector<std::string>{"tau", "A", "Phi"};
  if (names.size() != bases.size()) throw ContextMismatch("ansatz expects the FRW base coordinates");
  std::map<Symbol, Expr> coefficients;
  for (std::size_t i = 0; i < bases.size(); ++i) {
    coefficients.emplace(bases[i], Expr::apply(declare_function(names[i], bases)));
  }
  return VectorField(ctx, std::move(coefficients));
}

DeterminingEquations determining_equations(const ODESystem& sys) {
  DeterminingEquations out{ansatz_field(sys.context), sys.context.jet_variables(1), {}};
  // Free dependents keep their second derivatives as collection variables.
  for (Symbol u : sys.free_dependents) out.jet_variables.push_back(sys.context.jet(u, 2));
  ProlongedField pr2 = prolong(out.ansatz, 2);
  Binding shell = sys.on_shell();
  for (const auto& eq : sys.equations) {
    Expr condition = substitute(apply(pr2, eq.residual()), shell);
    out.blocks.push_back({eq.label, condition, collect(condition, out.jet_variables)});
  }
  return out;
}

std::vector<Expr> DeterminingEquations::substituted(const Binding& solution) const {
  std::vector<Expr> out;
  for (const auto& block : blocks) {
    for (const auto& [mono, coeff] : block.coefficients.terms()) out.push_back(substitute(coeff, solution));
  }
  return out;
}

// ---------------------------------------------------------------------------

VectorField commutator(const VectorField& g1, const VectorField& g2) {
  if (!(g1.context() == g2.context())) throw ContextMismatch("commutator of fields in different contexts");
  std::map<Symbol, Expr> out;
  for (Symbol s : g1.context().base_variables()) {
    out.emplace(s, g1.apply_base(g2.coefficient(s)) - g2.apply_base(g1.coefficient(s)));
  }
  return VectorField(g1.context(), std::move(out));
}

namespace {

using Vec = std::vector<Rational>;
using CoordinateKey = std::pair<std::uint32_t, Expr>;

// Coordinates of a vector field in the space of (base variable, coefficient
// monomial) pairs.
std::map<CoordinateKey, Rational> field_coordinates(const VectorField& v) {
  std::map<CoordinateKey, Rational> out;
  for (const auto& [s, c] : v.coefficients()) {
    for (const auto& [mono, q] : linear_terms(c)) out[{s.id, mono}] += q;
  }
  return out;
}

// Solves sum_j x_j columns[j] = target exactly; nullopt if inconsistent.
std::optional<Vec> solve_exact(const std::vector<std::map<CoordinateKey, Rational>>& columns,
                               const std::map<CoordinateKey, Rational>& target) {
  std::vector<CoordinateKey> rows;
  for (const auto& col : columns) {
    for (const auto& [k, q] : col) rows.push_back(k);
  }
  for (const auto& [k, q] : target) rows.push_back(k);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::size_t n = columns.size();
  std::vector<Vec> m(rows.size(), Vec(n + 1, Rational(0)));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      if (auto it = columns[j].find(rows[r]); it != columns[j].end()) m[r][j] = it->second;
    }
    if (auto it = target.find(rows[r]); it != target.end()) m[r][n] = it->second;
  }
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m.size(); ++col) {
    std::size_t p = row;
    while (p < m.size() && m[p][col] == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[row]);
    Rational inv = 1 / m[row][col];
    for (auto& x : m[row]) x *= inv;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][col] == 0) continue;
      Rational f = m[r][col];
      for (std::size_t c = 0; c <= n; ++c) m[r][c] -= f * m[row][c];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (std::size_t r = row; r < m.size(); ++r) {
    if (m[r][n] != 0) return std::nullopt;
  }
  Vec x(n, Rational(0));
  for (std::size_t r = 0; r < pivot_col.size(); ++r) x[pivot_col[r]] = m[r][n];
  return x;
}

std::size_t rank(std::vector<Vec> rows) {
  std::size_t rk = 0;
  std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (std::size_t c = 0; c < cols && rk < rows.size(); ++c) {
    std::size_t p = rk;
    while (p < rows.size() && rows[p][c] == 0) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[p], rows[rk]);
    for (std::size_t r = rk + 1; r < rows.size(); ++r) {
      if (rows[r][c] == 0) continue;
      Rational f = rows[r][c] / rows[rk][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[rk][k];
    }
    ++rk;
  }
  return rk;
}

// Row-reduced spanning set of `vectors`.
std::vector<Vec> span_basis(const std::vector<Vec>& vectors) {
  std::vector<Vec> basis;
  for (const Vec& v : vectors) {
    auto candidate = basis;
    candidate.push_back(v);
    if (rank(candidate) > basis.size()) basis.push_back(v);
  }
  return basis;
}

Vec bracket(const std::vector<std::vector<Vec>>& c, const Vec& x, const Vec& y) {
  std::size_t n = x.size();
  Vec out(n, Rational(0));
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (y[j] == 0) continue;
      for (std::size_t k = 0; k < n; ++k) out[k] += x[i] * y[j] * c[i][j][k];
    }
  }
  return out;
}

std::vector<Vec> brackets(const std::vector<std::vector<Vec>>& c, const std::vector<Vec>& lhs,
                          const std::vector<Vec>& rhs) {
  std::vector<Vec> products;
  for (const Vec& x : lhs) {
    for (const Vec& y : rhs) products.push_back(bracket(c, x, y));
  }
  return span_basis(products);
}

}  // namespace

AlgebraStructure classify(const std::vector<VectorField>& basis, std::vector<std::string> names) {
  AlgebraStructure out;
  std::size_t n = basis.size();
  if (names.empty()) {
    for (std::size_t i = 0; i < n; ++i) names.push_back("e" + std::to_string(i + 1));
  }
  if (names.size() != n) throw Error("one name per basis element required");
  out.names = std::move(names);
  out.basis = basis;
  std::vector<std::map<CoordinateKey, Rational>> columns;
  for (const auto& v : basis) columns.push_back(field_coordinates(v));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::map<CoordinateKey, Rational>> others(columns.begin(),
                                                          columns.begin() + static_cast<std::ptrdiff_t>(j));
    if (basis[j].is_zero() || solve_exact(others, columns[j])) {
      throw NotLinearlyIndependent("basis element " + out.names[j] + " depends on the preceding elements");
    }
  }
  out.constants.assign(n, std::vector<Vec>(n, Vec(n, Rational(0))));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      VectorField c = commutator(basis[i], basis[j]);
      auto x = solve_exact(columns, field_coordinates(c));
      if (!x) {
        throw NotClosed("[" + out.names[i] + ", " + out.names[j] + "] = " + render(c) + " is outside the span");
      }
      for (std::size_t k = 0; k < n; ++k) {
        out.constants[i][j][k] = (*x)[k];
        out.constants[j][i][k] = -(*x)[k];
      }
    }
  }
  std::vector<Vec> whole;
  for (std::size_t i = 0; i < n; ++i) {
    Vec e(n, Rational(0));
    e[i] = 1;
    whole.push_back(e);
  }
  std::vector<Vec> derived = whole;
  out.derived_series.push_back(derived.size());
  while (!derived.empty()) {
    auto next = brackets(out.constants, derived, derived);
    if (next.size() == derived.size()) break;
    derived = std::move(next);
    out.derived_series.push_back(derived.size());
  }
  std::vector<Vec> central = whole;
  out.lower_central_series.push_back(central.size());
  while (!central.empty()) {
    auto next = brackets(out.constants, whole, central);
    if (next.size() == central.size()) break;
    central = std::move(next);
    out.lower_central_series.push_back(central.size());
  }
  out.solvable = out.derived_series.back() == 0;
  out.nilpotent = out.lower_central_series.back() == 0;
  out.abelian = n < 2 || (out.derived_series.size() > 1 && out.derived_series[1] == 0);
  return out;
}

std::string AlgebraStructure::commutator_table() const {
  std::ostringstream out;
  std::size_t n = basis.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::string rhs;
      for (std::size_t k = 0; k < n; ++k) {
        const Rational& q = constants[i][j][k];
        if (q == 0) continue;
        std::string magnitude = abs(q) == 1 ? names[k] : Rational(abs(q)).get_str() + "*" + names[k];
        if (rhs.empty()) {
          rhs = (q < 0 ? "-" : "") + magnitude;
        } else {
          rhs += (q < 0 ? " - " : " + ") + magnitude;
        }
      }
      out << "[" << names[i] << ", " << names[j] << "] = " << (rhs.empty() ? "0" : rhs) << "\n";
    }
  }
  return out.str();
}

Expr lie_action_on_scalar(const VectorField& g, const Expr& e) {
  if (g.context().max_order(e) > 1) throw OrderOverflow("scalar must be first order in the jets");
  return apply(prolong(g, 1), e);
}

}  // namespace liefrw
