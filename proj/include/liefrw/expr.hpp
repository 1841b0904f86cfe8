#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "liefrw/error.hpp"

namespace liefrw {

using Rational = mpq_class;

/// Handle of a registered variable. Ordering follows registration order,
/// which is the variable order used by the graded-lexicographic monomial order.
struct Symbol {
  std::uint32_t id = 0;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// Handle of a declared opaque function.
struct FunctionRef {
  std::uint32_t id = 0;
  friend auto operator<=>(const FunctionRef&, const FunctionRef&) = default;
};

/// A jet coordinate is the `order`-th derivative of `base` with respect to
/// `independent`; it renders as D(base,independent,order).
struct JetInfo {
  Symbol base;
  Symbol independent;
  int order = 0;
};

// Global symbol registry. Append-only; safe for concurrent use.
Symbol variable(std::string_view name);
Symbol jet_variable(Symbol base, Symbol independent, int order);
std::optional<Symbol> find_variable(std::string_view name);
std::string symbol_name(Symbol s);
std::optional<JetInfo> jet_info(Symbol s);

/// Declares `name(params...)`. Re-declaring with identical parameters returns
/// the existing handle; a conflicting re-declaration throws.
FunctionRef declare_function(std::string_view name, std::vector<Symbol> params);
std::optional<FunctionRef> find_function(std::string_view name);
std::string function_name(FunctionRef f);
std::vector<Symbol> function_params(FunctionRef f);

namespace detail {
struct Node;
}

/// Immutable symbolic expression. Copies share structure.
class Expr {
 public:
  enum class Kind : std::uint8_t { Constant, Variable, Sum, Product, Power, Exp, Log, Function };

  Expr();
  Expr(int value);              // NOLINT(google-explicit-constructor)
  Expr(const Rational& value);  // NOLINT(google-explicit-constructor)
  Expr(Symbol s);               // NOLINT(google-explicit-constructor)

  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr power(Expr base, int exponent);
  static Expr exp(Expr arg);
  static Expr log(Expr arg);
  static Expr apply(FunctionRef f, std::vector<Expr> args, std::vector<int> orders = {});
  /// Applies `f` to its declared parameters.
  static Expr apply(FunctionRef f);

  Kind kind() const;
  const Rational& value() const;
  Symbol symbol() const;
  FunctionRef function() const;
  std::span<const int> orders() const;
  std::span<const Expr> children() const;
  int exponent() const;

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_constant(long v) const;
  bool depends_on(Symbol s) const;
  /// Sorted ids of every variable occurring in the tree, including inside
  /// function arguments.
  std::span<const std::uint32_t> free_symbols() const;
  std::size_t hash() const;

  friend bool operator==(const Expr& lhs, const Expr& rhs);
  friend std::strong_ordering operator<=>(const Expr& lhs, const Expr& rhs);

  const detail::Node* node() const { return node_.get(); }
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<const detail::Node> node_;
};

Expr operator+(const Expr& lhs, const Expr& rhs);
Expr operator-(const Expr& lhs, const Expr& rhs);
Expr operator*(const Expr& lhs, const Expr& rhs);
Expr operator/(const Expr& lhs, const Expr& rhs);
Expr operator-(const Expr& e);
Expr pow(const Expr& base, int exponent);
Expr exp(const Expr& arg);
Expr ln(const Expr& arg);

/// Variable expression by name, registering it if needed.
Expr var(std::string_view name);

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};

// ---------------------------------------------------------------------------
// Text form

/// Parses the infix grammar: + - * / ^, integer and decimal literals,
/// identifiers, f(args), exp/ln, and D(f, x, n). Throws ParseError.
Expr parse(std::string_view text);
std::string render(const Expr& e);

// ---------------------------------------------------------------------------
// Algebra

/// Expanded canonical form: sum of monomials in graded-lex order with exact
/// rational coefficients, exp factors merged, and any non-monomial
/// denominator kept as a product of normalized factors.
Expr normalize(const Expr& e);
Expr differentiate(const Expr& e, Symbol v);
Expr differentiate(const Expr& e, Symbol v, int times);

/// Symbolic substitution of variables and opaque functions. A function
/// binding maps f to a body over f's parameter list; derivative nodes of f
/// become the matching derivatives of the body.
class Binding {
 public:
  Binding& set(Symbol s, Expr value);
  Binding& set(FunctionRef f, std::vector<Symbol> params, Expr body);
  Binding& set(FunctionRef f, Expr body);  // over the declared parameters

  const Expr* find(Symbol s) const;
  struct FunctionBody {
    std::vector<Symbol> params;
    Expr body;
  };
  const FunctionBody* find(FunctionRef f) const;
  bool empty() const { return variables_.empty() && functions_.empty(); }

 private:
  std::map<Symbol, Expr> variables_;
  std::map<FunctionRef, FunctionBody> functions_;
};

Expr substitute(const Expr& e, const Binding& b);

/// Exact zero test on the normalized numerator. Unless disabled, a numeric
/// guard evaluates `e` at random points and throws NormalizationInconsistency
/// if a zero verdict is contradicted.
bool is_zero(const Expr& e);
void set_zero_guard(bool enabled);
bool zero_guard_enabled();

/// Coefficients of `e` viewed as a polynomial in `vars`. Keys are exponent
/// vectors aligned with `vars`; iteration follows the graded-lex order,
/// highest monomial first.
struct GradedLexGreater {
  bool operator()(const std::vector<int>& lhs, const std::vector<int>& rhs) const;
};

class Collected {
 public:
  Collected(std::vector<Symbol> vars, std::map<std::vector<int>, Expr, GradedLexGreater> terms);

  const std::vector<Symbol>& vars() const { return vars_; }
  const std::map<std::vector<int>, Expr, GradedLexGreater>& terms() const { return terms_; }
  /// Zero when the monomial does not occur.
  Expr coefficient(const std::vector<int>& exponents) const;
  Expr monomial(const std::vector<int>& exponents) const;
  Expr reassemble() const;
  std::size_t size() const { return terms_.size(); }

 private:
  std::vector<Symbol> vars_;
  std::map<std::vector<int>, Expr, GradedLexGreater> terms_;
};

Collected collect(const Expr& e, const std::vector<Symbol>& vars);

/// Quotient when `den` divides `num` exactly (denominators other than
/// monomials are not introduced), otherwise nullopt.
std::optional<Expr> exact_quotient(const Expr& num, const Expr& den);

/// Remainder of `e` on division by the polynomial `relation`; zero exactly
/// when `relation` divides `e`.
Expr reduce_modulo(const Expr& e, const Expr& relation);

/// Factors that must not vanish for the normalized form of `e` to be valid
/// (variables with negative exponents and non-monomial denominators).
std::vector<Expr> nonvanishing_conditions(const Expr& e);

/// Splits a normalized expression with at most monomial denominators into
/// (monomial, rational coefficient) pairs. Throws NotPolynomial otherwise.
std::vector<std::pair<Expr, Rational>> linear_terms(const Expr& e);

/// If `e` equals c * `reference` for a rational constant c, returns c.
std::optional<Rational> constant_ratio(const Expr& e, const Expr& reference);

// ---------------------------------------------------------------------------
// Numeric evaluation

/// Numeric rule for an opaque function: receives argument values and the
/// derivative multi-index.
using NumericFunction = std::function<double(std::span<const double> args, std::span<const int> orders)>;

/// Numeric rule for `f` obtained by differentiating `body` symbolically.
NumericFunction numeric_rule(FunctionRef f, Expr body);

class NumericBinding {
 public:
  NumericBinding& set(Symbol s, double value);
  NumericBinding& set(FunctionRef f, NumericFunction rule);
  const double* find(Symbol s) const;
  const NumericFunction* find(FunctionRef f) const;

 private:
  std::map<Symbol, double> values_;
  std::map<FunctionRef, NumericFunction> functions_;
};

/// Throws UnboundSymbol or DomainError.
double evaluate(const Expr& e, const NumericBinding& b);

/// Straight-line program for a batch of expressions with shared common
/// subexpressions and folded constants. Immutable after construction.
class CompiledExprs {
 public:
  CompiledExprs(const std::vector<Expr>& outputs, const std::vector<Symbol>& inputs,
                const std::map<FunctionRef, NumericFunction>& functions = {});

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t input_count() const { return input_count_; }
  std::size_t instruction_count() const { return program_.size(); }
  /// `scratch` is resized as needed and may be reused between calls.
  void run(std::span<const double> inputs, std::span<double> outputs, std::vector<double>& scratch) const;

 private:
  enum class Op : std::uint8_t { Constant, Input, Add, Mul, Pow, Exp, Log, Call };
  struct Instruction {
    Op op = Op::Constant;
    double constant = 0.0;
    int exponent = 0;
    std::uint32_t input = 0;
    std::vector<std::uint32_t> operands;
    std::vector<int> orders;
    std::uint32_t function = 0;
  };
  std::vector<Instruction> program_;
  std::vector<std::uint32_t> outputs_;
  std::size_t input_count_ = 0;
  std::vector<NumericFunction> functions_;
};

}  // namespace liefrw
