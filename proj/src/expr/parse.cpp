#include <algorithm>
#include <cctype>
#include <string>

#include "liefrw/expr.hpp"

namespace liefrw {
namespace {

/// Derivative designator D(f, p, n): the function with an orders multi-index.
struct Designator {
  FunctionRef function;
  std::vector<int> orders;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected input", {"operator", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message, std::vector<std::string> expected) const {
    throw ParseError(message, pos_, std::move(expected));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  void expect(char c) {
    if (!accept(c)) fail("unexpected input", {std::string("'") + c + "'"});
  }

  bool at_identifier() {
    char c = peek();
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string identifier() {
    if (!at_identifier()) fail("unexpected input", {"identifier"});
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  int integer_literal() {
    skip_space();
    bool negative = accept('-');
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("unexpected input", {"integer"});
    std::string digits(text_.substr(start, pos_ - start));
    if (digits.size() > 9) {
      pos_ = start;
      fail("integer out of range", {"integer"});
    }
    int v = std::stoi(digits);
    return negative ? -v : v;
  }

  Rational number() {
    std::size_t start = pos_;
    std::string digits;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) digits += text_[pos_++];
    int scale = 0;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        digits += text_[pos_++];
        ++scale;
      }
    }
    if (digits.empty()) {
      pos_ = start;
      fail("malformed number", {"digit"});
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      int sign = 1;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) sign = text_[pos_++] == '-' ? -1 : 1;
      std::string exponent;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) exponent += text_[pos_++];
      if (exponent.empty() || exponent.size() > 4) {
        pos_ = mark;
        fail("malformed exponent", {"digit"});
      }
      scale -= sign * std::stoi(exponent);
    }
    mpz_class numerator(digits, 10);
    mpz_class ten_power;
    mpz_ui_pow_ui(ten_power.get_mpz_t(), 10, static_cast<unsigned long>(std::abs(scale)));
    Rational q = scale >= 0 ? Rational(numerator, ten_power) : Rational(numerator * ten_power);
    q.canonicalize();
    return q;
  }

  Expr parse_sum() {
    std::vector<Expr> terms{parse_product()};
    while (true) {
      if (accept('+')) {
        terms.push_back(parse_product());
      } else if (accept('-')) {
        terms.push_back(-parse_product());
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms.front() : Expr::sum(std::move(terms));
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    while (true) {
      if (accept('*')) {
        lhs = lhs * parse_unary();
      } else if (accept('/')) {
        lhs = lhs / parse_unary();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (!accept('^')) return base;
    std::size_t at = (skip_space(), pos_);
    int exponent = 0;
    if (accept('(')) {
      exponent = integer_literal();
      expect(')');
    } else {
      exponent = integer_literal();
    }
    if (peek() == '^') {
      // Right associative: a^b^c = a^(b^c), with integer tower exponents.
      ++pos_;
      int outer = integer_literal();
      if (outer < 0 || outer > 16) {
        pos_ = at;
        fail("exponent tower out of range", {"integer"});
      }
      long long v = 1;
      for (int i = 0; i < outer; ++i) {
        v *= exponent;
        if (v > 1000000 || v < -1000000) {
          pos_ = at;
          fail("exponent out of range", {"integer"});
        }
      }
      exponent = static_cast<int>(v);
    }
    return pow(base, exponent);
  }

  Expr parse_primary() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr(number());
    if (!at_identifier()) fail("unexpected input", {"number", "identifier", "'('", "'-'"});
    std::size_t start = pos_;
    std::string name = identifier();
    if (name == "D" && peek() == '(') return parse_d(start);
    if (peek() != '(') {
      if (name == "exp" || name == "ln") fail("function requires an argument list", {"'('"});
      if (auto f = find_function(name)) return Expr::apply(*f);
      try {
        return Expr(variable(name));
      } catch (const Error& err) {
        pos_ = start;
        fail(err.what(), {"identifier"});
      }
    }
    ++pos_;
    std::vector<Expr> args = parse_arguments();
    if (name == "exp" || name == "ln") {
      if (args.size() != 1) {
        pos_ = start;
        fail("'" + name + "' takes one argument", {});
      }
      return name == "exp" ? exp(args[0]) : ln(args[0]);
    }
    return apply_named(name, std::move(args), {}, start);
  }

  std::vector<Expr> parse_arguments() {
    std::vector<Expr> args;
    if (accept(')')) return args;
    do {
      args.push_back(parse_sum());
    } while (accept(','));
    expect(')');
    return args;
  }

  Expr apply_named(const std::string& name, std::vector<Expr> args, std::vector<int> orders, std::size_t start) {
    std::optional<FunctionRef> f = find_function(name);
    if (!f) {
      // Unknown functions are declared on first use when applied to
      // distinct plain variables.
      std::vector<Symbol> params;
      for (const Expr& a : args) {
        bool plain = a.kind() == Expr::Kind::Variable && !jet_info(a.symbol());
        bool repeated = plain && std::find(params.begin(), params.end(), a.symbol()) != params.end();
        if (!plain || repeated) {
          pos_ = start;
          fail("unknown function '" + name + "' must first be applied to distinct variables", {});
        }
        params.push_back(a.symbol());
      }
      try {
        f = declare_function(name, params);
      } catch (const Error& err) {
        pos_ = start;
        fail(err.what(), {});
      }
    }
    if (function_params(*f).size() != args.size()) {
      pos_ = start;
      fail("arity mismatch for '" + name + "': expected " + std::to_string(function_params(*f).size()) +
               " arguments, got " + std::to_string(args.size()),
           {});
    }
    return Expr::apply(*f, std::move(args), std::move(orders));
  }

  // D(f, p, n) designates a formal partial of an opaque function, D(u, x, n)
  // with plain variables is a jet coordinate, anything else differentiates.
  Expr parse_d(std::size_t start) {
    std::size_t mark = pos_;
    if (auto designator = try_designator()) {
      std::vector<Expr> args;
      if (accept('(')) {
        args = parse_arguments();
      } else {
        for (Symbol p : function_params(designator->function)) args.emplace_back(p);
      }
      return apply_named(function_name(designator->function), std::move(args), designator->orders, start);
    }
    pos_ = mark;
    expect('(');
    Expr target = parse_sum();
    expect(',');
    std::size_t var_at = (skip_space(), pos_);
    std::string wrt = identifier();
    Symbol x;
    try {
      x = variable(wrt);
    } catch (const Error& err) {
      pos_ = var_at;
      fail(err.what(), {"variable"});
    }
    expect(',');
    std::size_t order_at = (skip_space(), pos_);
    int n = integer_literal();
    if (n < 0) {
      pos_ = order_at;
      fail("derivative order must be non-negative", {"integer"});
    }
    expect(')');
    if (target.kind() == Expr::Kind::Variable && n > 0) {
      Symbol u = target.symbol();
      if (u != x) {
        if (auto info = jet_info(u); !info) return Expr(jet_variable(u, x, n));
        if (auto info = jet_info(u); info && info->independent == x) {
          return Expr(jet_variable(info->base, x, info->order + n));
        }
      }
    }
    return differentiate(target, x, n);
  }

  std::optional<Designator> try_designator() {
    if (!accept('(')) return std::nullopt;
    Designator d;
    skip_space();
    std::size_t inner = pos_;
    if (!at_identifier()) return std::nullopt;
    std::string head = identifier();
    if (head == "D" && peek() == '(') {
      auto nested = try_designator();
      if (!nested) return std::nullopt;
      d = *nested;
    } else {
      auto f = find_function(head);
      if (!f || peek() != ',') return std::nullopt;
      d.function = *f;
      d.orders.assign(function_params(*f).size(), 0);
    }
    (void)inner;
    if (!accept(',')) return std::nullopt;
    std::size_t param_at = (skip_space(), pos_);
    std::string param = identifier();
    auto params = function_params(d.function);
    auto sym = find_variable(param);
    auto it = sym ? std::find(params.begin(), params.end(), *sym) : params.end();
    if (it == params.end()) {
      pos_ = param_at;
      fail("'" + param + "' is not a parameter of '" + function_name(d.function) + "'", {"parameter name"});
    }
    expect(',');
    std::size_t order_at = (skip_space(), pos_);
    int n = integer_literal();
    if (n < 0) {
      pos_ = order_at;
      fail("derivative order must be non-negative", {"integer"});
    }
    expect(')');
    d.orders[static_cast<std::size_t>(it - params.begin())] += n;
    return d;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace liefrw
