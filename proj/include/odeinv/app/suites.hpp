#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace odeinv::app {

/// Outcome of one seeded property suite. `worst` is the largest observed
/// error divided by its tolerance, so a suite passes with worst <= 1.
struct SuiteResult {
  std::string name;
  bool pass = true;
  int cases = 0;
  int checks = 0;
  int failures = 0;
  double worst = 0.0;
  std::vector<std::string> notes;  // reseeds, skipped cases, first failures

  void check(bool ok, const std::string& what);
  /// Records error / limit in `worst` and fails when it exceeds 1.
  void bound(double error, double limit, const std::string& what);
};

struct SuiteOptions {
  std::uint64_t seed = 42;
  int trials = 0;  // cases per suite; 0 selects the full size of each suite
};

/// Exact fixtures: L1, L2, L3(1, 1) and orbit classes, in rational arithmetic.
SuiteResult transcriptionSuite(const SuiteOptions& options);

/// Scalar invariance of I1, I2, covariance of the frame and the degree-5
/// density law of L3 on seeded (E, f) pairs (20 pairs x 10 points).
SuiteResult invarianceSuite(const SuiteOptions& options);

/// Identity and composition laws of the pushforward by probabilistic
/// equality (20 cases) and the closed form of the swap map, exactly.
SuiteResult pushforwardLawSuite(const SuiteOptions& options);

/// Images of integrated solution arcs solve the pushforward (10 cases).
SuiteResult solutionSuite(const SuiteOptions& options);

/// decideEquivalence on constructed pushforward pairs (Equivalent, map
/// recovered) and on pairs with a0 scaled by 1.1 (NotEquivalent); 10 each.
SuiteResult pipelineSuite(const SuiteOptions& options);

/// Tresse derivatives: exact defining relation for h = I1, I2 and
/// reconstruction of dh at sample points.
SuiteResult tresseSuite(const SuiteOptions& options);

std::vector<SuiteResult> runAllSuites(const SuiteOptions& options);

/// Fixed-format table, 12 significant digits; identical for identical
/// options.
std::string formatSuiteTable(const std::vector<SuiteResult>& results, const SuiteOptions& options);

}  // namespace odeinv::app
