#pragma once

#include "odeinv/ode/cubic_ode.hpp"
#include "odeinv/ode/errors.hpp"

#include <array>
#include <vector>

namespace odeinv::ode {

/// Planar diffeomorphism (x~, y~) = (phi(x,y), psi(x,y)) with a supplied
/// inverse. The inverse expressions are written in the same variable names
/// x, y, read as target coordinates. Valid on `domain` only.
class PointMap {
 public:
  /// Checks inv(fwd(p)) = p within 1e-9 and det Dfwd(p) != 0 on a 5x5 grid
  /// of `domain`; throws MapInvalid otherwise.
  static PointMap make(Expr phi, Expr psi, Expr invPhi, Expr invPsi, const Box& domain);
  static PointMap identity(const Box& domain);

  const Expr& phi() const { return fwd_[0]; }
  const Expr& psi() const { return fwd_[1]; }
  const Expr& invPhi() const { return inv_[0]; }
  const Expr& invPsi() const { return inv_[1]; }
  const Box& domain() const { return domain_; }

  Point2 apply(Point2 p) const;
  Point2 applyInverse(Point2 q) const;

  /// Jacobian matrix of the forward map at p, row-major
  /// {phi_x, phi_y, psi_x, psi_y}.
  std::array<double, 4> jacobian(Point2 p) const;
  double jacobianDeterminant(Point2 p) const;

  /// Bounding box of the image of an n x n grid of the domain. The default
  /// grid contains every node of a 41 x 41 lattice.
  Box imageBounds(int n = 161) const;

 private:
  PointMap(std::array<Expr, 2> fwd, std::array<Expr, 2> inv, const Box& domain);

  std::array<Expr, 2> fwd_;
  std::array<Expr, 2> inv_;
  std::array<Expr, 4> fwdJacobian_;
  Box domain_;
};

/// The coefficients of E after the change of variables f, as functions of
/// the target coordinates. Built from the 2-jet of the inverse map:
///
///   y~'' det(Dg) = sum_i a_i(g) M^i K^(3-i) - psi2 K + M phi2,
///
/// where g = f^-1 = (phi, psi) in target variables, K = phi_x + phi_y p~,
/// M = psi_x + psi_y p~, and phi2, psi2 are the second derivatives of phi,
/// psi along the direction (1, p~). The right side is checked to be cubic in
/// p~ (ClosureViolation otherwise).
CubicODE pushforwardODE(const CubicODE& E, const PointMap& f);

/// f o g on g's domain. Throws DomainMismatch when g maps part of its
/// domain grid outside f's domain.
PointMap composePointMaps(const PointMap& f, const PointMap& g);

/// Lowest-to-highest coefficients in p~ of the numerator above, before the
/// closure check. Exposed for tests.
std::vector<Expr> pushforwardNumerator(const CubicODE& E, const PointMap& f);

}  // namespace odeinv::ode
