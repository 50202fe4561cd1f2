#pragma once

#include "odeinv/ode/point_map.hpp"

#include <vector>

namespace odeinv::ode {

struct ArcSample {
  double x;
  double y;
  double slope;
};

/// Samples of one solution curve, x strictly monotone.
struct SolutionArc {
  std::vector<ArcSample> samples;
};

/// Classical RK4 for y'' = sum a_i y'^i from (start, slope) taking `steps`
/// steps of size h (h may be negative). Throws SingularEvaluation when a
/// coefficient cannot be evaluated or the state leaves the finite range.
SolutionArc integrateArc(const CubicODE& E, Point2 start, double slope, int steps, double h);

/// Image of the arc's points under f. Slopes are recomputed by finite
/// differences (as in arcResidual); throws DomainMismatch unless x~ stays
/// strictly monotone.
SolutionArc mapArc(const SolutionArc& arc, const PointMap& f);

/// Largest |y'' - rhs(x, y, y')| over the samples with two neighbours on
/// each side, with y' and y'' from centred five-point differences on the
/// (possibly uneven) x grid. Arcs of three or four samples use three points.
/// Throws DomainMismatch when x is not strictly monotone.
double arcResidual(const CubicODE& E, const SolutionArc& arc);

}  // namespace odeinv::ode
