#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "odeinv/canonical/equivalence.hpp"
#include "odeinv/expr/parse.hpp"
#include "odeinv/ode/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

using namespace odeinv::canonical;
using odeinv::expr::parse;
using odeinv::expr::Rational;
using odeinv::ode::makeODE;
using odeinv::ode::PointMap;

namespace {

const Box kUnit{-1.0, 1.0, -1.0, 1.0};

CubicODE fixture() { return makeODE(parse("y^2"), 0, 0, parse("x^2")); }

double relDiff(double a, double b) { return std::fabs(a - b) / (1.0 + std::max(std::fabs(a), std::fabs(b))); }

struct Pair {
  CubicODE E;
  PointMap f;
  CubicODE pushed;
};

Pair pipelinePair(unsigned seed) {
  std::mt19937_64 rng(seed);
  CubicODE E = odeinv::ode::randomPolynomialODE(rng, 2);
  PointMap f = odeinv::ode::randomTestMap(rng, kUnit, seed % 2 == 0);
  CubicODE pushed = odeinv::ode::pushforwardODE(E, f);
  return {std::move(E), std::move(f), std::move(pushed)};
}

CubicODE scaledA0(const CubicODE& E) {
  CubicODE out = E;
  out.a[0] = E.a[0] * Expr(Rational(11, 10));
  return out;
}

}  // namespace

TEST_CASE("degenerate equations have no chart") {
  CHECK_THROWS_AS(canonicalChart(makeODE(0), kUnit, 11), NowhereGeneralPosition);
  CHECK_THROWS_AS(canonicalForm(makeODE(parse("x*y")), kUnit, 11), odeinv::invariants::DegenerateOrbit);
  const auto v = decideEquivalence(makeODE(0), fixture(), kUnit, kUnit, 11);
  CHECK(v.status == EquivalenceStatus::Inconclusive);
  CHECK_FALSE(v.notes.empty());
}

TEST_CASE("lattice layout and mask") {
  const CanonicalForm C = canonicalForm(fixture(), kUnit, 21);
  REQUIRE(C.nodes.size() == 441);
  CHECK(C.nodes[0].x == -1.0);
  CHECK(C.nodes[20].x == 1.0);
  CHECK(C.nodes[21].y == doctest::Approx(-0.9));
  CHECK(C.maskedCount() > 400);
  for (std::size_t k = 0; k < C.nodes.size(); ++k) {
    if (!C.mask[k]) {
      CHECK(std::isnan(C.coeffs[k][0]));
      continue;
    }
    CHECK(std::fabs(C.jacobian[k]) > kDefaultJacTol);
    for (double c : C.coeffs[k]) CHECK(std::isfinite(c));
  }
  // (1, 1) is node (20, 20); I1, I2 there are fixed by the invariants suite
  CHECK(C.gValues[440].x == doctest::Approx(-0.79702299204033684).epsilon(1e-12));
  CHECK(C.gValues[440].y == doctest::Approx(0.79877887899665707).epsilon(1e-12));
}

TEST_CASE("chart invariance and canonical idempotence") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const Pair P = pipelinePair(seed);
    const CanonicalForm C1 = canonicalForm(P.E, kUnit, 21);
    const ChartModel M2(P.pushed);
    std::vector<Point2> images;
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < C1.nodes.size(); ++k)
      if (C1.mask[k]) {
        images.push_back(P.f.apply(C1.nodes[k]));
        ks.push_back(k);
      }
    const auto charts = M2.chartAt(images);
    const auto coeffs = M2.coefficientsAt(images);
    double worstChart = 0.0, worstCoeff = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (!charts[i] || !coeffs[i]) continue;
      ++compared;
      const std::size_t k = ks[i];
      worstChart = std::max({worstChart, relDiff(charts[i]->g.x, C1.gValues[k].x), relDiff(charts[i]->g.y, C1.gValues[k].y)});
      for (int c = 0; c < 4; ++c) worstCoeff = std::max(worstCoeff, relDiff((*coeffs[i])[c], C1.coeffs[k][c]));
    }
    CHECK(compared > ks.size() * 9 / 10);
    CHECK_MESSAGE(worstChart <= 1e-6, "seed " << seed);
    CHECK_MESSAGE(worstCoeff <= 1e-5, "seed " << seed);
  }
}

TEST_CASE("jacobian sign changes between masked neighbours cross the mask boundary") {
  // Continuity oracle: where adjacent masked nodes disagree in sign, bisection
  // along the edge must end outside the general-position set: at a point
  // that fails the mask, at a zero of the Jacobian (small against the
  // products it cancels from), or at a pole where L3 vanishes.
  std::mt19937_64 rng(17);
  std::size_t flips = 0;
  for (int t = 0; t < 4; ++t) {
    const CubicODE E = odeinv::ode::randomPolynomialODE(rng, 2);
    const CanonicalForm C = canonicalChart(E, kUnit, 31);
    const auto n = static_cast<std::size_t>(C.n);
    for (std::size_t k = 0; k < C.nodes.size(); ++k) {
      for (const std::size_t nb : {k + 1, k + n}) {
        if ((nb == k + 1 && (k + 1) % n == 0) || nb >= C.nodes.size()) continue;
        if (!C.mask[k] || !C.mask[nb] || (C.jacobian[k] > 0) == (C.jacobian[nb] > 0)) continue;
        ++flips;
        const double nodeScale = std::max(std::fabs(C.jacobian[k]), std::fabs(C.jacobian[nb]));
        Point2 a = C.nodes[k], b = C.nodes[nb];
        double ja = C.jacobian[k];
        bool boundary = false;
        for (int it = 0; it < 80 && !boundary; ++it) {
          const Point2 m{(a.x + b.x) / 2, (a.y + b.y) / 2};
          if ((m.x == a.x && m.y == a.y) || (m.x == b.x && m.y == b.y)) break;
          const auto s = C.model->chartAt(m);
          if (!s || !s->generalPosition) {
            boundary = true;
            break;
          }
          const double cancel = std::fabs(s->dg[0] * s->dg[3]) + std::fabs(s->dg[1] * s->dg[2]);
          if (std::fabs(s->jacobian) <= 1e-6 * cancel || std::fabs(s->jacobian) >= 1e20 * nodeScale) boundary = true;
          if ((s->jacobian > 0) == (ja > 0)) {
            a = m;
            ja = s->jacobian;
          } else {
            b = m;
          }
        }
        CHECK_MESSAGE(boundary, "sign change inside the mask near (" << a.x << ", " << a.y << ")");
      }
    }
  }
  MESSAGE("sign flips checked: " << flips);
  CHECK(flips > 0);
}

TEST_CASE("invertChartAt") {
  const CanonicalForm C = canonicalForm(fixture(), kUnit, 21);
  SUBCASE("exact seed returns the node") {
    for (std::size_t k : {std::size_t{25}, std::size_t{210}, std::size_t{440}}) {
      REQUIRE(C.mask[k]);
      const Point2 p = invertChartAt(C, C.gValues[k]);
      CHECK(std::hypot(p.x - C.nodes[k].x, p.y - C.nodes[k].y) <= 1e-9);
    }
  }
  SUBCASE("round trip at random targets") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int done = 0;
    while (done < 20) {
      const auto s = C.model->chartAt(Point2{u(rng), u(rng)});
      if (!s || !s->generalPosition || !insideHull(C.hull, s->g)) continue;
      const Point2 p = invertChartAt(C, s->g);
      const auto back = C.model->chartAt(p);
      REQUIRE(back);
      CHECK(std::hypot(back->g.x - s->g.x, back->g.y - s->g.y) <= 1e-8 * std::max(1.0, std::hypot(s->g.x, s->g.y)));
      ++done;
    }
  }
  SUBCASE("outside the hull") {
    CHECK_THROWS_AS(invertChartAt(C, Point2{1e6, 1e6}), OutOfRange);
  }
  SUBCASE("batch preimages agree with the single-target search") {
    std::vector<Point2> targets{C.gValues[30], C.gValues[300]};
    const auto batch = chartPreimages(C, targets);
    REQUIRE(batch.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(batch[i] == chartPreimages(C, targets[i]));
  }
}

TEST_CASE("the canonical form is a fixed point of its own chart") {
  // Fit the canonical coefficients J~i by polynomials around x~0 = g(p0),
  // then compute I1, I2 of the fitted equation: they should reproduce the
  // canonical coordinates themselves. The invariants use third derivatives
  // of the fit, so p0 is the node where Dg is closest to orthogonal.
  std::mt19937_64 rng(3);
  const CanonicalForm C = canonicalForm(odeinv::ode::randomPolynomialODE(rng, 2), kUnit, 21);
  std::size_t k0 = 0;
  double bestScore = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < C.nodes.size(); ++k) {
    const std::size_t i = k % 21, j = k / 21;
    if (!C.mask[k] || i < 2 || j < 2 || i > 18 || j > 18) continue;
    Eigen::Matrix2d D;
    D << C.dg[k][0], C.dg[k][1], C.dg[k][2], C.dg[k][3];
    const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(D).singularValues();
    const double score = std::fabs(std::log(sv(0))) + std::fabs(std::log(sv(1)));
    if (score < bestScore) {
      bestScore = score;
      k0 = k;
    }
  }
  REQUIRE(bestScore < 1.0);
  const Point2 t0 = C.gValues[k0];
  const double r = 0.01;
  const int m = 17, degree = 10;
  std::vector<Point2> targets, seeds;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      targets.push_back({t0.x + r * (2.0 * i / (m - 1) - 1), t0.y + r * (2.0 * j / (m - 1) - 1)});
      seeds.push_back(C.nodes[k0]);
    }
  const auto pre = refinePreimages(C, targets, seeds);
  std::vector<Point2> ps;
  for (const auto& p : pre) {
    REQUIRE(p);
    ps.push_back(*p);
  }
  const auto J = C.model->coefficientsAt(ps);
  std::vector<std::pair<int, int>> mono;
  for (int d = 0; d <= degree; ++d)
    for (int i = d; i >= 0; --i) mono.emplace_back(i, d - i);
  Eigen::MatrixXd V(targets.size(), mono.size());
  Eigen::MatrixXd rhs(targets.size(), 4);
  for (std::size_t s = 0; s < targets.size(); ++s) {
    REQUIRE(J[s]);
    const double u = (targets[s].x - t0.x) / r, v = (targets[s].y - t0.y) / r;
    for (std::size_t c = 0; c < mono.size(); ++c) V(s, c) = std::pow(u, mono[c].first) * std::pow(v, mono[c].second);
    for (int i = 0; i < 4; ++i) rhs(s, i) = (*J[s])[i];
  }
  const Eigen::MatrixXd coef = V.colPivHouseholderQr().solve(rhs);
  CHECK(std::sqrt((V * coef - rhs).squaredNorm() / static_cast<double>(V.rows())) <= 1e-10);
  const Expr U = (Expr::x() - Expr(Rational(t0.x))) * Expr(Rational(1.0 / r));
  const Expr W = (Expr::y() - Expr(Rational(t0.y))) * Expr(Rational(1.0 / r));
  std::array<Expr, 4> a;
  for (int i = 0; i < 4; ++i) {
    std::vector<Expr> terms;
    for (std::size_t c = 0; c < mono.size(); ++c)
      terms.push_back(Expr(Rational(coef(static_cast<Eigen::Index>(c), i))) * pow(U, mono[c].first) *
                      pow(W, mono[c].second));
    a[static_cast<std::size_t>(i)] = Expr::sum(std::move(terms));
  }
  const auto B = odeinv::invariants::computeInvariants(makeODE(a[0], a[1], a[2], a[3]));
  const double I1 = odeinv::expr::eval(B.I1, t0), I2 = odeinv::expr::eval(B.I2, t0);
  MESSAGE("fixed point error " << std::hypot(I1 - t0.x, I2 - t0.y));
  CHECK(std::hypot(I1 - t0.x, I2 - t0.y) <= 1e-3 * (1 + std::hypot(t0.x, t0.y)));
}

TEST_CASE("E against itself") {
  const auto v = decideEquivalence(fixture(), fixture(), kUnit, kUnit, 21);
  CHECK(v.status == EquivalenceStatus::Equivalent);
  CHECK(v.maxDeviation <= 1e-12);
  CHECK(v.coverage >= 0.9);
  for (const auto& s : v.recoveredMap) CHECK(std::hypot(s.p.x - s.q.x, s.p.y - s.q.y) <= 1e-8);
}

TEST_CASE("pipeline: pushforward is recovered") {
  for (unsigned seed : {2u, 3u}) {
    CAPTURE(seed);
    const Pair P = pipelinePair(seed);
    const Box dom2 = P.f.imageBounds();
    const auto v = decideEquivalence(P.E, P.pushed, kUnit, dom2, 41);
    CHECK(v.status == EquivalenceStatus::Equivalent);
    CHECK(v.maxDeviation <= 1e-5);
    CHECK(v.coverage >= 0.9);
    std::size_t agree = 0;
    for (const auto& s : v.recoveredMap) {
      const Point2 q = P.f.apply(s.p);
      if (std::hypot(q.x - s.q.x, q.y - s.q.y) <= 1e-5) ++agree;
    }
    CHECK(agree >= v.recoveredMap.size() * 9 / 10);

    // g2(q) = g1(p) at the recovered pairs
    const ChartModel M1(P.E), M2(P.pushed);
    for (std::size_t i = 0; i < v.recoveredMap.size(); i += 7) {
      const auto a = M1.chartAt(v.recoveredMap[i].p);
      const auto b = M2.chartAt(v.recoveredMap[i].q);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(std::hypot(a->g.x - b->g.x, a->g.y - b->g.y) <= 1e-10 * std::max(1.0, std::hypot(a->g.x, a->g.y)));
    }

    // the maps are polynomials of degree <= 3, so the cubic fit is exact
    REQUIRE(v.fittedMap);
    CHECK(v.fittedMap->rmsResidual <= 1e-8);
    const Point2 p{0.3, -0.6};
    const Point2 q = P.f.apply(p), g = (*v.fittedMap)(p);
    CHECK(std::hypot(q.x - g.x, q.y - g.y) <= 1e-7);

    // reversed: nodes of the image box whose counterpart lies outside the
    // unit square are out of range, not mismatches
    const auto w = decideEquivalence(P.pushed, P.E, dom2, kUnit, 41);
    CHECK(w.status == v.status);
    CHECK(w.maxDeviation <= 1e-5);
    CHECK(w.outOfRange > 0);
  }
}

TEST_CASE("pipeline: a scaled a0 is detected") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const Pair P = pipelinePair(seed);
    const CubicODE E2 = scaledA0(P.E);
    const auto v = decideEquivalence(P.E, E2, kUnit, kUnit, 41);
    CAPTURE(seed);
    CHECK(v.status == EquivalenceStatus::NotEquivalent);
    CHECK(v.maxDeviation > 1e-5);
    const auto w = decideEquivalence(E2, P.E, kUnit, kUnit, 41);
    CHECK(w.status == v.status);
    CHECK(w.maxDeviation <= 2 * v.maxDeviation);
    CHECK(v.maxDeviation <= 2 * w.maxDeviation);
  }
}

TEST_CASE("verdict invariants") {
  const Pair P = pipelinePair(3);
  EquivalenceOptions opts;
  opts.coverageThreshold = 0.999;
  const auto v = decideEquivalence(P.E, P.pushed, kUnit, P.f.imageBounds(), 21, opts);
  CHECK(v.status == EquivalenceStatus::Inconclusive);
  CHECK(v.coverage < 0.999);
  CHECK(v.matched <= v.masked);
  CHECK(v.matched + v.outOfRange + v.noConvergence <= v.masked);
}
