#pragma once

#include "odeinv/expr/evaluate.hpp"
#include "odeinv/expr/expr.hpp"

#include <array>

namespace odeinv::ode {

using expr::Box;
using expr::Expr;
using expr::Point2;

/// y'' = a3 y'^3 + a2 y'^2 + a1 y' + a0, coefficients functions of (x, y).
/// a[i] multiplies y'^i.
struct CubicODE {
  std::array<Expr, 4> a;

  const Expr& a0() const { return a[0]; }
  const Expr& a1() const { return a[1]; }
  const Expr& a2() const { return a[2]; }
  const Expr& a3() const { return a[3]; }

  /// Right-hand side at (p, slope). Throws expr::EvalError.
  double rhs(Point2 p, double slope) const;
};

CubicODE makeODE(Expr a0, Expr a1 = 0, Expr a2 = 0, Expr a3 = 0);

}  // namespace odeinv::ode
