#pragma once

#include "odeinv/ode/point_map.hpp"

#include <string>
#include <string_view>

namespace odeinv::ode {

/// Reads `a0 = <expr>` ... `a3 = <expr>` lines. Blank lines and lines
/// starting with '#' are skipped; a coefficient that is not listed is 0.
/// Any error, including a malformed expression, is a FileFormatError
/// naming the line.
CubicODE parseODE(std::string_view text);

/// Reads `fx = `, `fy = `, `invx = `, `invy = ` and `domain = x0 x1 y0 y1`.
/// All five are required. The map is validated (MapInvalid).
PointMap parsePointMap(std::string_view text);

std::string formatODE(const CubicODE& E);
std::string formatPointMap(const PointMap& f);

std::string readFile(const std::string& path);

}  // namespace odeinv::ode
