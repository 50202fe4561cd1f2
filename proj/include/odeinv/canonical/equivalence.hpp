#pragma once

#include "odeinv/canonical/canonical.hpp"

#include <string>

namespace odeinv::canonical {

enum class EquivalenceStatus { Equivalent, NotEquivalent, Inconclusive };

std::string_view statusName(EquivalenceStatus s);

struct MapSample {
  Point2 p;  // node of the first equation's grid
  Point2 q;  // g2^-1(g1(p))
};

/// Least-squares polynomial approximation of the recovered map,
/// x~ = sum cx[k] x^i y^j over monomials[k] = (i, j).
struct FittedMap {
  int degree = 0;
  std::vector<std::pair<int, int>> monomials;
  std::vector<double> cx;
  std::vector<double> cy;
  double rmsResidual = 0.0;

  Point2 operator()(Point2 p) const;
};

struct EquivalenceOptions {
  double tol = 1e-5;
  double coverageThreshold = 0.25;
  double jacTol = kDefaultJacTol;
  int fitDegree = 3;
  InvertOptions invert;
};

struct EquivalenceVerdict {
  EquivalenceStatus status = EquivalenceStatus::Inconclusive;
  double maxDeviation = 0.0;
  double coverage = 0.0;          // matched nodes / all nodes
  std::size_t nodes = 0;
  std::size_t masked = 0;         // general-position nodes of the first chart
  std::size_t matched = 0;
  std::size_t outOfRange = 0;
  std::size_t noConvergence = 0;
  std::size_t unverified = 0;     // mismatched only on chart sheets cut off from the matched region
  std::vector<MapSample> recoveredMap;
  std::optional<FittedMap> fittedMap;
  std::vector<std::string> notes;
};

/// Samples both canonical forms and compares the canonical coefficients of
/// E1 at each masked node p with those of E2 at q = g2^-1(g1(p)). The
/// deviation of one coefficient is |c1 - c2| / (1 + max(|c1|, |c2|)).
/// Equivalent needs coverage >= threshold and maxDeviation <= tol. When g2
/// has several preimages near g1(p), the best-matching one is used.
/// From the matched nodes the map is continued along lattice edges; nodes
/// whose continued counterpart leaves dom2 count as out of range. Once
/// coverage reaches the threshold, mismatches that continuation cannot
/// reach are reported as unverified instead of entering maxDeviation.
EquivalenceVerdict decideEquivalence(const CubicODE& E1, const CubicODE& E2, const Box& dom1, const Box& dom2, int n,
                                     const EquivalenceOptions& options = {});

/// Degree-`degree` least-squares fit through the samples (nullopt when
/// there are fewer samples than monomials).
std::optional<FittedMap> fitPolynomialMap(const std::vector<MapSample>& samples, int degree);

}  // namespace odeinv::canonical
