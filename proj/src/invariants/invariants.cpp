#include "odeinv/invariants/invariants.hpp"

#include "odeinv/expr/calculus.hpp"

#include <cmath>

namespace odeinv::invariants {

using expr::DerivativeCache;
using expr::Rational;
using expr::Var;

namespace {


Expr c(int v) { return Expr(v); }

void requireNondegenerate(const Expr& L3) {
  if (L3.isZero() || expr::isIdenticallyZero(L3) == expr::ZeroTest::Zero)
    throw DegenerateOrbit("L3 vanishes identically: the equation has no point in general position");
}

}  // namespace

std::pair<Expr, Expr> relativeInvariantsL(const CubicODE& E, DerivativeCache& d) {
  auto dx = [&](const Expr& e) { return d.diff(e, Var::X); };
  auto dy = [&](const Expr& e) { return d.diff(e, Var::Y); };
  auto diff = [&](const Expr& e, int nx, int ny) { return d.diff(e, nx, ny); };
  const Expr& u1 = E.a[0];
  const Expr& u2 = E.a[1];
  const Expr& u3 = E.a[2];
  const Expr& u4 = E.a[3];
  const Expr L1 = Expr::sum({c(3) * diff(u1, 0, 2), c(-2) * diff(u2, 1, 1), diff(u3, 2, 0), c(3) * u4 * dx(u1),
                             c(-3) * u3 * dy(u1), c(2) * u2 * dy(u2), c(-1) * u2 * dx(u3), c(-3) * u1 * dy(u3),
                             c(6) * u1 * dx(u4)});
  const Expr L2 = Expr::sum({c(3) * diff(u4, 2, 0), c(-2) * diff(u3, 1, 1), diff(u2, 0, 2), c(-3) * u1 * dy(u4),
                             c(3) * u2 * dx(u4), c(-2) * u3 * dx(u3), u3 * dy(u2), c(3) * u4 * dx(u2),
                             c(-6) * u4 * dy(u1)});
  return {L1, L2};
}

Expr relativeInvariantL3(const CubicODE& E, const Expr& L1, const Expr& L2, DerivativeCache& d) {
  const Expr L1x = d.diff(L1, Var::X), L1y = d.diff(L1, Var::Y), L2x = d.diff(L2, Var::X), L2y = d.diff(L2, Var::Y);
  return Expr::sum({L2 * (L1 * L2x - L2 * L1x), c(-1) * L1 * (L1 * L2y - L2 * L1y), pow(L1, 3) * E.a[3],
                    c(-1) * pow(L1, 2) * L2 * E.a[2], L1 * pow(L2, 2) * E.a[1], c(-1) * pow(L2, 3) * E.a[0]});
}

std::pair<Expr, Expr> psiInvariants(const CubicODE& E, const Expr& L1, const Expr& L2, DerivativeCache& d) {
  const Expr& u1 = E.a[0];
  const Expr& u2 = E.a[1];
  const Expr& u3 = E.a[2];
  const Expr& u4 = E.a[3];
  const Expr L1x = d.diff(L1, Var::X), L1y = d.diff(L1, Var::Y), L2x = d.diff(L2, Var::X), L2y = d.diff(L2, Var::Y);
  const Expr psi1 = Expr::sum({c(-1) * pow(L1, 2) * u3, c(2) * L1 * L2 * u2, c(-3) * pow(L2, 2) * u1, c(-1) * L1 * L1y,
                               c(4) * L1 * L2x, c(-3) * L2 * L1x});
  const Expr psi2 = Expr::sum({c(-1) * pow(L2, 2) * u2, c(2) * L1 * L2 * u3, c(-3) * pow(L1, 2) * u4, L2 * L2x,
                               c(-4) * L2 * L1y, c(3) * L1 * L2y});
  return {psi1, psi2};
}

Expr derivativeAlong(const VectorField& v, const Expr& h, DerivativeCache& d) {
  return v[0] * d.diff(h, Var::X) + v[1] * d.diff(h, Var::Y);
}

std::pair<Expr, Expr> relativeInvariantsL(const CubicODE& E) {
  DerivativeCache d;
  return relativeInvariantsL(E, d);
}

Expr relativeInvariantL3(const CubicODE& E, const Expr& L1, const Expr& L2) {
  DerivativeCache d;
  return relativeInvariantL3(E, L1, L2, d);
}

std::pair<Expr, Expr> psiInvariants(const CubicODE& E, const Expr& L1, const Expr& L2) {
  DerivativeCache d;
  return psiInvariants(E, L1, L2, d);
}

Expr derivativeAlong(const VectorField& v, const Expr& h) {
  DerivativeCache d;
  return derivativeAlong(v, h, d);
}

namespace {

Expr divergence(const VectorField& v, DerivativeCache& d) { return d.diff(v[0], Var::X) + d.diff(v[1], Var::Y); }

std::pair<VectorField, VectorField> frameFrom(const Expr& L1, const Expr& L2, const Expr& L3, const Expr& psi1,
                                              const Expr& psi2) {
  const Expr s1 = pow(L3, Rational(-2, 5));
  const Expr s2 = pow(L3, Rational(-4, 5));
  return {VectorField{s1 * L2, -(s1 * L1)}, VectorField{s2 * psi2, -(s2 * psi1)}};
}

Expr scalarFrom(const VectorField& xi, const Expr& L3, DerivativeCache& d) {
  return divergence(xi, d) + derivativeAlong(xi, L3, d) / (c(5) * L3);
}

}  // namespace

std::pair<VectorField, VectorField> invariantFrame(const CubicODE& E) {
  DerivativeCache d;
  const auto [L1, L2] = relativeInvariantsL(E, d);
  const Expr L3 = relativeInvariantL3(E, L1, L2, d);
  requireNondegenerate(L3);
  const auto [psi1, psi2] = psiInvariants(E, L1, L2, d);
  return frameFrom(L1, L2, L3, psi1, psi2);
}

Expr liouvilleForm(const CubicODE& E) {
  const auto [L1, L2] = relativeInvariantsL(E);
  const Expr L3 = relativeInvariantL3(E, L1, L2);
  requireNondegenerate(L3);
  return pow(L3, Rational(1, 5));
}

std::pair<Expr, Expr> scalarInvariants(const CubicODE& E) {
  const InvariantBundle B = computeInvariants(E);
  return {B.I1, B.I2};
}

InvariantBundle computeInvariants(const CubicODE& E) {
  DerivativeCache d;
  return computeInvariants(E, d);
}

InvariantBundle computeInvariants(const CubicODE& E, DerivativeCache& d) {
  InvariantBundle B;
  std::tie(B.L1, B.L2) = relativeInvariantsL(E, d);
  B.L3 = relativeInvariantL3(E, B.L1, B.L2, d);
  requireNondegenerate(B.L3);
  std::tie(B.Psi1, B.Psi2) = psiInvariants(E, B.L1, B.L2, d);
  std::tie(B.xi1, B.xi2) = frameFrom(B.L1, B.L2, B.L3, B.Psi1, B.Psi2);
  B.nuDensity = pow(B.L3, Rational(1, 5));
  B.I1 = scalarFrom(B.xi1, B.L3, d);
  B.I2 = scalarFrom(B.xi2, B.L3, d);
  return B;
}

std::string_view levelName(OrbitLevel level) {
  switch (level) {
    case OrbitLevel::GeneralPosition3: return "GeneralPosition3";
    case OrbitLevel::Degenerate2: return "Degenerate2";
    case OrbitLevel::Degenerate3: return "Degenerate3";
    case OrbitLevel::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

OrbitClass classifyOrbit(const CubicODE& E) {
  using expr::ZeroTest;
  OrbitClass out;
  const auto [L1, L2] = relativeInvariantsL(E);
  const ZeroTest z1 = expr::isIdenticallyZero(L1);
  const ZeroTest z2 = expr::isIdenticallyZero(L2);
  if (z1 == ZeroTest::Zero && z2 == ZeroTest::Zero) {
    out.level = OrbitLevel::Degenerate2;
    return out;
  }
  if (z1 != ZeroTest::NonZero && z2 != ZeroTest::NonZero) {
    out.note = "could not decide whether L1, L2 vanish identically";
    return out;
  }
  const ZeroTest z3 = expr::isIdenticallyZero(relativeInvariantL3(E, L1, L2));
  if (z3 == ZeroTest::Zero) {
    out.level = OrbitLevel::Degenerate3;
  } else if (z3 == ZeroTest::NonZero) {
    out.level = OrbitLevel::GeneralPosition3;
    out.note = "general position off the zero set of L1 L2 L3";
  } else {
    out.note = "could not decide whether L3 vanishes identically";
  }
  return out;
}

OrbitClass classifyOrbit(const CubicODE& E, Point2 p) {
  OrbitClass out;
  out.pointwise = true;
  out.note = "pointwise test, |value| <= 1e-10 counts as zero";
  const auto [L1, L2] = relativeInvariantsL(E);
  try {
    const double l1 = expr::eval(L1, p);
    const double l2 = expr::eval(L2, p);
    if (std::fabs(l1) <= kPointwiseZeroTol && std::fabs(l2) <= kPointwiseZeroTol) {
      out.level = OrbitLevel::Degenerate2;
      return out;
    }
    const double l3 = expr::eval(relativeInvariantL3(E, L1, L2), p);
    out.level = std::fabs(l3) <= kPointwiseZeroTol ? OrbitLevel::Degenerate3 : OrbitLevel::GeneralPosition3;
  } catch (const expr::EvalError& err) {
    out.level = OrbitLevel::Undetermined;
    out.note = std::string("coefficients not evaluable at the point: ") + err.what();
  }
  return out;
}

}  // namespace odeinv::invariants
