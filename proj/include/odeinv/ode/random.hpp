#pragma once

#include "odeinv/ode/point_map.hpp"

#include <random>

namespace odeinv::ode {

/// Polynomial of total degree <= `degree` with small rational coefficients
/// (multiples of 1/4 in [-2, 2]); roughly a third of the monomials are 0.
Expr randomPolynomial(std::mt19937_64& rng, int degree);

/// ODE whose four coefficients are independent random polynomials.
CubicODE randomPolynomialODE(std::mt19937_64& rng, int degree);

/// A2 o S o A1 with A1, A2 invertible affine maps (small rational entries,
/// determinant of either sign) and S(x, y) = (x + c y^3, y). With
/// `cubic` false, c = 0 and the map is affine. The inverse is exact.
PointMap randomTestMap(std::mt19937_64& rng, const Box& domain, bool cubic);

}  // namespace odeinv::ode
