#pragma once

#include "odeinv/expr/expr.hpp"

#include <unordered_map>

namespace odeinv::expr {

/// Partial derivative. Powers use d(b^r) = r b^(r-1) db with r exact.
Expr diff(const Expr& e, Var v);

/// Mixed partial: differentiate `nx` times in x and `ny` times in y.
Expr diff(const Expr& e, int nx, int ny);

/// Differentiates many related expressions with one memo, so shared
/// subexpressions are differentiated once and their derivatives shared.
/// Keeps every node it has seen alive.
class DerivativeCache {
 public:
  Expr diff(const Expr& e, Var v);
  Expr diff(const Expr& e, int nx, int ny);

 private:
  struct Entry {
    Expr key;  // pins the node so its address stays unique
    Expr derivative;
  };
  std::unordered_map<const Node*, Entry> memo_[2];
};

/// Replaces x by `sx` and y by `sy` simultaneously.
Expr substitute(const Expr& e, const Expr& sx, const Expr& sy);

}  // namespace odeinv::expr
