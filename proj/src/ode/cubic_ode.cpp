#include "odeinv/ode/cubic_ode.hpp"

#include <utility>

namespace odeinv::ode {

double CubicODE::rhs(Point2 p, double slope) const {
  // Horner in the slope
  double v = expr::eval(a[3], p);
  for (int i = 2; i >= 0; --i) v = v * slope + expr::eval(a[i], p);
  return v;
}

CubicODE makeODE(Expr a0, Expr a1, Expr a2, Expr a3) {
  return CubicODE{{std::move(a0), std::move(a1), std::move(a2), std::move(a3)}};
}

}  // namespace odeinv::ode
