#pragma once

#include "odeinv/expr/tape.hpp"
#include "odeinv/invariants/invariants.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace odeinv::canonical {

using expr::Box;
using expr::Expr;
using expr::Point2;
using invariants::CubicODE;
using invariants::InvariantBundle;

/// No grid node is in general position with a usable chart Jacobian. A
/// special case of DegenerateOrbit, which equations with L3 = 0 raise too.
class NowhereGeneralPosition : public invariants::DegenerateOrbit {
 public:
  using invariants::DegenerateOrbit::DegenerateOrbit;
};

class OutOfRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kDefaultJacTol = 1e-8;

/// The chart g = (I1, I2) of one equation, compiled for evaluation.
class ChartModel {
 public:
  /// Throws DegenerateOrbit when L3 vanishes identically.
  explicit ChartModel(const CubicODE& E, double jacTol = kDefaultJacTol);

  struct ChartSample {
    Point2 g;                  // (I1, I2)
    std::array<double, 4> dg;  // {I1_x, I1_y, I2_x, I2_y}
    double jacobian = 0.0;
    bool generalPosition = false;  // (L1, L2) != 0, L3 != 0 and |jacobian| > jacTol
  };

  const CubicODE& ode() const { return ode_; }
  const InvariantBundle& bundle() const { return bundle_; }
  double jacTol() const { return jacTol_; }

  /// nullopt where the invariants cannot be evaluated.
  std::optional<ChartSample> chartAt(Point2 p) const;

  /// Canonical coefficients at g(p): the equation rewritten in the
  /// coordinates (I1, I2). nullopt where not in general position.
  std::optional<std::array<double, 4>> coefficientsAt(Point2 p) const;

  /// Batch versions over many points; entries are nullopt as above.
  std::vector<std::optional<ChartSample>> chartAt(const std::vector<Point2>& points) const;
  std::vector<std::optional<std::array<double, 4>>> coefficientsAt(const std::vector<Point2>& points) const;

 private:
  CubicODE ode_;
  InvariantBundle bundle_;
  double jacTol_;
  expr::Tape chartTape_;  // I1, I2, first partials, L1, L2, L3
  expr::Tape formTape_;   // second partials of I1, I2, and a0..a3
};

/// Samples of the chart and canonical form on an n x n lattice. Node k is
/// (i, j) = (k % n, k / n) at x = x0 + i dx, y = y0 + j dy.
struct CanonicalForm {
  Box domain;
  int n = 0;
  std::vector<Point2> nodes;
  std::vector<Point2> gValues;      // NaN where not evaluable
  std::vector<double> jacobian;     // NaN where not evaluable
  std::vector<std::array<double, 4>> dg;  // {I1_x, I1_y, I2_x, I2_y}, NaN where not evaluable
  std::vector<std::uint8_t> mask;   // general position and |jacobian| > jacTol
  std::vector<std::array<double, 4>> coeffs;  // J~0..J~3, NaN where unmasked
  bool hasCoefficients = false;
  std::vector<Point2> hull;  // convex hull of masked gValues, counter-clockwise
  std::shared_ptr<const ChartModel> model;

  std::size_t maskedCount() const;
};

/// Chart only (no coefficients). Throws NowhereGeneralPosition when no node
/// qualifies, DegenerateOrbit when L3 = 0 identically.
CanonicalForm canonicalChart(const CubicODE& E, const Box& domain, int n, double jacTol = kDefaultJacTol);

/// Chart plus canonical coefficients at every masked node.
CanonicalForm canonicalForm(const CubicODE& E, const Box& domain, int n, double jacTol = kDefaultJacTol);

struct InvertOptions {
  double residualTol = 1e-10;  // on |g(p) - target|, scaled by max(1, |target|)
  int maxIterations = 50;
  int seeds = 4;  // nearest masked nodes tried as extra Newton starting points
  bool stayInDomain = true;  // false: refinePreimages also returns points outside the domain
};

/// g^-1(target) by Newton's method. Seeds are the piecewise-linear
/// preimages in lattice cells whose chart image contains the target, then
/// the masked nodes with the nearest chart values. Throws
/// OutOfRange when the target lies outside the hull of the sampled chart or
/// the solution leaves the domain; NoConvergence when no seed converges.
Point2 invertChartAt(const CanonicalForm& C, Point2 target, const InvertOptions& options = {});

/// All distinct preimages reached from the seeds above, cell seeds first.
/// Empty when none converges inside the domain.
std::vector<Point2> chartPreimages(const CanonicalForm& C, Point2 target, const InvertOptions& options = {});

/// Batch form: entry t holds the preimages of targets[t]. All Newton
/// iterates advance together through batched chart evaluation.
std::vector<std::vector<Point2>> chartPreimages(const CanonicalForm& C, const std::vector<Point2>& targets,
                                                const InvertOptions& options = {});

/// Newton from an explicit seed per target; nullopt where it does not
/// converge (inside the domain, unless options.stayInDomain is false).
std::vector<std::optional<Point2>> refinePreimages(const CanonicalForm& C, const std::vector<Point2>& targets,
                                                   const std::vector<Point2>& seeds, const InvertOptions& options = {});

bool insideHull(const std::vector<Point2>& hull, Point2 q);

}  // namespace odeinv::canonical
