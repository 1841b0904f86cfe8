#pragma once

#include <cstdint>
#include <vector>

#include "liefrw/expr.hpp"

namespace liefrw::detail {

struct Node {
  Expr::Kind kind = Expr::Kind::Constant;
  Rational value;
  std::uint32_t id = 0;  // symbol or function
  int exponent = 0;
  std::vector<int> orders;
  std::vector<Expr> children;
  std::vector<std::uint32_t> free;
  std::size_t hash = 0;
  // Produced by the canonical-form builder; atoms flagged this way are
  // reused as-is when the tree is normalized again.
  bool normalized = false;
};

Expr make_node(Node node);

}  // namespace liefrw::detail
