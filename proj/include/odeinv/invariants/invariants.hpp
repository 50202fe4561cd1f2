#pragma once

#include "odeinv/expr/calculus.hpp"
#include "odeinv/ode/cubic_ode.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace odeinv::invariants {

using expr::Expr;
using expr::Point2;
using ode::CubicODE;

/// Raised by every construction that needs L3 != 0.
class DegenerateOrbit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Components (along d/dx, d/dy) of a vector field.
using VectorField = std::array<Expr, 2>;

struct InvariantBundle {
  Expr L1, L2;
  Expr L3;
  Expr Psi1, Psi2;
  VectorField xi1, xi2;
  Expr nuDensity;  // L3^(1/5)
  Expr I1, I2;
};

// Jet coordinates are pulled back to the section: u^1..u^4 are a0..a3 and
// subscripts are partial derivatives.

std::pair<Expr, Expr> relativeInvariantsL(const CubicODE& E);
Expr relativeInvariantL3(const CubicODE& E, const Expr& L1, const Expr& L2);
std::pair<Expr, Expr> psiInvariants(const CubicODE& E, const Expr& L1, const Expr& L2);

/// xi1 = L3^(-2/5) (L2, -L1), xi2 = L3^(-4/5) (Psi2, -Psi1).
/// Throws DegenerateOrbit when L3 vanishes identically.
std::pair<VectorField, VectorField> invariantFrame(const CubicODE& E);

/// Density of the invariant 2-form L3^(1/5) dx^dy (real fifth root).
Expr liouvilleForm(const CubicODE& E);

/// I_i = xi_i(nu)/nu = div xi_i + xi_i(L3) / (5 L3).
std::pair<Expr, Expr> scalarInvariants(const CubicODE& E);

/// Everything above in one pass. Throws DegenerateOrbit.
InvariantBundle computeInvariants(const CubicODE& E);

/// Lie derivative of a function along a vector field.
Expr derivativeAlong(const VectorField& v, const Expr& h);

/// Variants that share derivatives through `cache`, for callers that go on
/// differentiating the results.
std::pair<Expr, Expr> relativeInvariantsL(const CubicODE& E, expr::DerivativeCache& cache);
Expr relativeInvariantL3(const CubicODE& E, const Expr& L1, const Expr& L2, expr::DerivativeCache& cache);
std::pair<Expr, Expr> psiInvariants(const CubicODE& E, const Expr& L1, const Expr& L2, expr::DerivativeCache& cache);
InvariantBundle computeInvariants(const CubicODE& E, expr::DerivativeCache& cache);
Expr derivativeAlong(const VectorField& v, const Expr& h, expr::DerivativeCache& cache);

enum class OrbitLevel { GeneralPosition3, Degenerate2, Degenerate3, Undetermined };

std::string_view levelName(OrbitLevel level);

struct OrbitClass {
  OrbitLevel level = OrbitLevel::Undetermined;
  bool pointwise = false;
  /// Caveat for the reader, e.g. the threshold a pointwise test used.
  std::string note;
};

constexpr double kPointwiseZeroTol = 1e-10;

/// Whole-domain class: Degenerate2 when L1 and L2 vanish identically,
/// Degenerate3 when only L3 does, GeneralPosition3 when L3 is a nonzero
/// function. Undetermined when an identity test is inconclusive.
OrbitClass classifyOrbit(const CubicODE& E);

/// Class of the jet at p, with |.| <= 1e-10 counting as zero.
OrbitClass classifyOrbit(const CubicODE& E, Point2 p);

}  // namespace odeinv::invariants
