#pragma once

#include "odeinv/invariants/invariants.hpp"

namespace odeinv::invariants {

class NotInGeneralPosition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tresse derivatives (dh/dI1, dh/dI2), defined by
/// dh = (dh/dI1) dI1 + (dh/dI2) dI2. Symbolic, by Cramer's rule on
///
///   [I1_x I2_x] [dh/dI1]   [h_x]
///   [I1_y I2_y] [dh/dI2] = [h_y].
std::pair<Expr, Expr> tresseDerivative(const Expr& h, const InvariantBundle& B);

/// The same system solved numerically at p. Throws NotInGeneralPosition when
/// |det| <= 1e-10.
std::array<double, 2> tresseDerivativeAt(const Expr& h, const InvariantBundle& B, Point2 p);

}  // namespace odeinv::invariants
