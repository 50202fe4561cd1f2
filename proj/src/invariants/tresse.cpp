#include "odeinv/invariants/tresse.hpp"

#include "odeinv/expr/calculus.hpp"

#include <cmath>

namespace odeinv::invariants {

using expr::diff;
using expr::Var;

std::pair<Expr, Expr> tresseDerivative(const Expr& h, const InvariantBundle& B) {
  const Expr hx = diff(h, Var::X), hy = diff(h, Var::Y);
  const Expr ax = diff(B.I1, Var::X), ay = diff(B.I1, Var::Y);
  const Expr bx = diff(B.I2, Var::X), by = diff(B.I2, Var::Y);
  const Expr det = ax * by - ay * bx;
  const Expr inv = pow(det, -1);
  return {(hx * by - hy * bx) * inv, (ax * hy - ay * hx) * inv};
}

std::array<double, 2> tresseDerivativeAt(const Expr& h, const InvariantBundle& B, Point2 p) {
  auto at = [&](const Expr& e, Var v) { return expr::eval(diff(e, v), p); };
  const double hx = at(h, Var::X), hy = at(h, Var::Y);
  const double ax = at(B.I1, Var::X), ay = at(B.I1, Var::Y);
  const double bx = at(B.I2, Var::X), by = at(B.I2, Var::Y);
  const double det = ax * by - ay * bx;
  if (!(std::fabs(det) > 1e-10))
    throw NotInGeneralPosition("dI1 and dI2 are dependent here (|det| = " + std::to_string(std::fabs(det)) + ")");
  return {(hx * by - hy * bx) / det, (ax * hy - ay * hx) / det};
}

}  // namespace odeinv::invariants
