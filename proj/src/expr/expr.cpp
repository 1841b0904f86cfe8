#include <algorithm>
#include <cassert>

#include "node.hpp"

namespace liefrw {
namespace detail {
namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_rational(const Rational& q) {
  // Low limbs are enough; collisions only cost a structural comparison.
  std::size_t h = std::hash<long>{}(mpz_get_si(q.get_num_mpz_t()));
  h = mix(h, std::hash<long>{}(mpz_get_si(q.get_den_mpz_t())));
  return mix(h, static_cast<std::size_t>(mpz_size(q.get_num_mpz_t())));
}

}  // namespace

Expr make_node(Node node) {
  std::size_t h = static_cast<std::size_t>(node.kind) * 0x100000001b3ULL;
  switch (node.kind) {
    case Expr::Kind::Constant:
      h = mix(h, hash_rational(node.value));
      break;
    case Expr::Kind::Variable:
      h = mix(h, node.id);
      node.free = {node.id};
      break;
    case Expr::Kind::Function:
      h = mix(h, node.id);
      for (int o : node.orders) h = mix(h, static_cast<std::size_t>(o));
      break;
    case Expr::Kind::Power:
      h = mix(h, static_cast<std::size_t>(node.exponent));
      break;
    default:
      break;
  }
  for (const Expr& c : node.children) {
    h = mix(h, c.hash());
    auto fs = c.free_symbols();
    if (fs.empty()) continue;
    std::vector<std::uint32_t> merged;
    merged.reserve(node.free.size() + fs.size());
    std::set_union(node.free.begin(), node.free.end(), fs.begin(), fs.end(), std::back_inserter(merged));
    node.free = std::move(merged);
  }
  node.hash = h;
  return Expr(std::make_shared<const Node>(std::move(node)));
}

}  // namespace detail

using detail::make_node;
using detail::Node;

namespace {

const Expr& zero_expr() {
  static const Expr z = [] {
    Node n;
    n.kind = Expr::Kind::Constant;
    n.value = 0;
    n.normalized = true;
    return make_node(std::move(n));
  }();
  return z;
}

Expr make_constant(const Rational& q) {
  Node n;
  n.kind = Expr::Kind::Constant;
  n.value = q;
  n.value.canonicalize();
  n.normalized = true;
  return make_node(std::move(n));
}

template <Expr::Kind K>
void flatten_into(std::vector<Expr>& out, const Expr& e) {
  if (e.kind() == K) {
    for (const Expr& c : e.children()) out.push_back(c);
  } else {
    out.push_back(e);
  }
}

}  // namespace

Expr::Expr() : Expr(zero_expr()) {}
Expr::Expr(int value) : Expr(value == 0 ? zero_expr() : make_constant(Rational(value))) {}
Expr::Expr(const Rational& value) : Expr(make_constant(value)) {}
Expr::Expr(Symbol s) {
  Node n;
  n.kind = Kind::Variable;
  n.id = s.id;
  n.normalized = true;
  *this = make_node(std::move(n));
}

Expr Expr::sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (const Expr& t : terms) flatten_into<Kind::Sum>(flat, t);
  if (flat.empty()) return Expr(0);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = Kind::Sum;
  n.children = std::move(flat);
  return make_node(std::move(n));
}

Expr Expr::product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  for (const Expr& f : factors) flatten_into<Kind::Product>(flat, f);
  if (flat.empty()) return Expr(1);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = Kind::Product;
  n.children = std::move(flat);
  return make_node(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  if (exponent == 1) return base;
  Node n;
  n.kind = Kind::Power;
  n.exponent = exponent;
  n.children = {std::move(base)};
  return make_node(std::move(n));
}

Expr Expr::exp(Expr arg) {
  Node n;
  n.kind = Kind::Exp;
  n.children = {std::move(arg)};
  return make_node(std::move(n));
}

Expr Expr::log(Expr arg) {
  Node n;
  n.kind = Kind::Log;
  n.children = {std::move(arg)};
  return make_node(std::move(n));
}

Expr Expr::apply(FunctionRef f, std::vector<Expr> args, std::vector<int> orders) {
  const auto params = function_params(f);
  if (args.size() != params.size()) {
    throw Error("function '" + function_name(f) + "' expects " + std::to_string(params.size()) + " arguments, got " +
                std::to_string(args.size()));
  }
  if (orders.empty()) orders.assign(args.size(), 0);
  if (orders.size() != args.size()) throw Error("derivative multi-index has the wrong length");
  for (int o : orders) {
    if (o < 0) throw Error("negative derivative order");
  }
  Node n;
  n.kind = Kind::Function;
  n.id = f.id;
  n.orders = std::move(orders);
  n.children = std::move(args);
  return make_node(std::move(n));
}

Expr Expr::apply(FunctionRef f) {
  std::vector<Expr> args;
  for (Symbol p : function_params(f)) args.emplace_back(p);
  return apply(f, std::move(args));
}

Expr::Kind Expr::kind() const { return node_->kind; }
const Rational& Expr::value() const {
  assert(kind() == Kind::Constant);
  return node_->value;
}
Symbol Expr::symbol() const {
  assert(kind() == Kind::Variable);
  return Symbol{node_->id};
}
FunctionRef Expr::function() const {
  assert(kind() == Kind::Function);
  return FunctionRef{node_->id};
}
std::span<const int> Expr::orders() const { return node_->orders; }
std::span<const Expr> Expr::children() const { return node_->children; }
int Expr::exponent() const { return node_->exponent; }
bool Expr::is_constant(long v) const { return kind() == Kind::Constant && node_->value == v; }
bool Expr::depends_on(Symbol s) const { return std::binary_search(node_->free.begin(), node_->free.end(), s.id); }
std::span<const std::uint32_t> Expr::free_symbols() const { return node_->free; }
std::size_t Expr::hash() const { return node_->hash; }

bool operator==(const Expr& lhs, const Expr& rhs) {
  if (lhs.node_ == rhs.node_) return true;
  if (lhs.hash() != rhs.hash()) return false;
  return (lhs <=> rhs) == 0;
}

std::strong_ordering operator<=>(const Expr& lhs, const Expr& rhs) {
  if (lhs.node_ == rhs.node_) return std::strong_ordering::equal;
  const Node& a = *lhs.node_;
  const Node& b = *rhs.node_;
  if (a.kind != b.kind) return a.kind <=> b.kind;
  switch (a.kind) {
    case Expr::Kind::Constant: {
      int c = cmp(a.value, b.value);
      return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }
    case Expr::Kind::Variable:
      return a.id <=> b.id;
    case Expr::Kind::Function:
      if (auto c = a.id <=> b.id; c != 0) return c;
      if (auto c = a.orders <=> b.orders; c != 0) return c;
      break;
    case Expr::Kind::Power:
      if (auto c = a.exponent <=> b.exponent; c != 0) return c;
      break;
    default:
      break;
  }
  if (auto c = a.children.size() <=> b.children.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (auto c = a.children[i] <=> b.children[i]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

Expr operator+(const Expr& lhs, const Expr& rhs) { return Expr::sum({lhs, rhs}); }
Expr operator-(const Expr& lhs, const Expr& rhs) { return Expr::sum({lhs, -rhs}); }
Expr operator*(const Expr& lhs, const Expr& rhs) { return Expr::product({lhs, rhs}); }
Expr operator/(const Expr& lhs, const Expr& rhs) { return Expr::product({lhs, Expr::power(rhs, -1)}); }
Expr operator-(const Expr& e) {
  if (e.is_constant()) return Expr(Rational(-e.value()));
  return Expr::product({Expr(-1), e});
}
Expr pow(const Expr& base, int exponent) { return Expr::power(base, exponent); }
Expr exp(const Expr& arg) { return Expr::exp(arg); }
Expr ln(const Expr& arg) { return Expr::log(arg); }
Expr var(std::string_view name) { return Expr(variable(name)); }

}  // namespace liefrw
