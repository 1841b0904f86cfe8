#include <functional>
#include <string>

#include "liefrw/expr.hpp"

namespace liefrw {
namespace {

enum Precedence : int { kSum = 1, kProduct = 2, kPower = 4, kAtom = 5 };

std::string render_at(const Expr& e, int context);

std::string rational_text(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string render_function(const Expr& e) {
  FunctionRef f = e.function();
  std::string name = function_name(f);
  auto args = e.children();
  auto orders = e.orders();
  std::vector<std::string> rendered;
  for (const Expr& a : args) rendered.push_back(render_at(a, 0));
  auto join = [&] {
    std::string out = "(";
    for (std::size_t i = 0; i < rendered.size(); ++i) out += (i ? ", " : "") + rendered[i];
    return out + ")";
  };
  bool derivative = false;
  for (int o : orders) derivative = derivative || o > 0;
  if (!derivative) return name + join();

  std::vector<Symbol> params = function_params(f);
  std::string designator = name;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (orders[i] > 0)
      designator = "D(" + designator + "," + symbol_name(params[i]) + "," + std::to_string(orders[i]) + ")";
  }
  bool on_params = true;
  for (std::size_t i = 0; i < params.size(); ++i) {
    on_params = on_params && args[i].kind() == Expr::Kind::Variable && args[i].symbol() == params[i];
  }
  return on_params ? designator : designator + join();
}

bool negative_constant(const Expr& e) { return e.is_constant() && e.value() < 0; }

// Product split into a rational coefficient, numerator factors and
// denominator factors (with positive exponents).
struct ProductParts {
  Rational coefficient = 1;
  std::vector<Expr> numerator;
  std::vector<Expr> denominator;
};

ProductParts split_product(const Expr& e) {
  ProductParts parts;
  std::function<void(const Expr&)> add = [&](const Expr& f) {
    if (f.kind() == Expr::Kind::Product) {
      for (const Expr& g : f.children()) add(g);
    } else if (f.is_constant()) {
      parts.coefficient *= f.value();
    } else if (f.kind() == Expr::Kind::Power && f.exponent() < 0) {
      parts.denominator.push_back(f.exponent() == -1 ? f.children()[0] : pow(f.children()[0], -f.exponent()));
    } else {
      parts.numerator.push_back(f);
    }
  };
  add(e);
  return parts;
}

std::string render_product(const Expr& e, int context) {
  ProductParts parts = split_product(e);
  if (parts.coefficient == 0) return "0";
  bool negative = parts.coefficient < 0;
  mpz_class num = abs(parts.coefficient.get_num());
  mpz_class den = parts.coefficient.get_den();

  std::string top;
  auto append = [](std::string& out, const std::string& piece) { out += (out.empty() ? "" : "*") + piece; };
  if (num != 1 || parts.numerator.empty()) top = num.get_str();
  for (const Expr& f : parts.numerator) append(top, render_at(f, kProduct + 1));

  std::vector<std::string> bottom;
  if (den != 1) bottom.push_back(den.get_str());
  for (const Expr& f : parts.denominator) bottom.push_back(render_at(f, kProduct + 1));

  // Each denominator factor gets its own division so that reparsing keeps
  // the factorization of the normal form.
  std::string out = top;
  for (const auto& b : bottom) out += "/" + b;
  if (negative) out = "-" + out;
  // A leading sign binds looser than a power base or a factor.
  int own = negative ? kSum : kProduct;
  return own < context ? "(" + out + ")" : out;
}

bool renders_negative(const Expr& e) {
  if (negative_constant(e)) return true;
  if (e.kind() == Expr::Kind::Product || (e.kind() == Expr::Kind::Power && e.exponent() < 0)) {
    return split_product(e).coefficient < 0;
  }
  return false;
}

std::string render_at(const Expr& e, int context) {
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      std::string text = rational_text(e.value());
      bool compound = e.value() < 0 || e.value().get_den() != 1;
      int own = e.value() < 0 ? kSum : (e.value().get_den() != 1 ? kProduct : kAtom);
      return compound && own < context ? "(" + text + ")" : text;
    }
    case Expr::Kind::Variable:
      return symbol_name(e.symbol());
    case Expr::Kind::Sum: {
      std::string out;
      bool first = true;
      for (const Expr& term : e.children()) {
        if (first) {
          out = render_at(term, kSum);
        } else if (renders_negative(term)) {
          out += " - " + render_at(-term, kSum + 1);
        } else {
          out += " + " + render_at(term, kSum + 1);
        }
        first = false;
      }
      if (e.children().empty()) out = "0";
      return kSum < context ? "(" + out + ")" : out;
    }
    case Expr::Kind::Product:
      return render_product(e, context);
    case Expr::Kind::Power: {
      if (e.exponent() < 0) return render_product(e, context);
      std::string out = render_at(e.children()[0], kAtom) + "^" + std::to_string(e.exponent());
      return kPower < context ? "(" + out + ")" : out;
    }
    case Expr::Kind::Exp:
      return "exp(" + render_at(e.children()[0], 0) + ")";
    case Expr::Kind::Log:
      return "ln(" + render_at(e.children()[0], 0) + ")";
    case Expr::Kind::Function:
      return render_function(e);
  }
  return {};
}

}  // namespace

std::string render(const Expr& e) { return render_at(e, 0); }

}  // namespace liefrw
