#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "odeinv/expr/calculus.hpp"
#include "odeinv/expr/parse.hpp"
#include "odeinv/expr/polynomial.hpp"
#include "odeinv/expr/tape.hpp"
#include "odeinv/invariants/tresse.hpp"
#include "odeinv/ode/random.hpp"

#include <cmath>

using namespace odeinv::invariants;
using odeinv::expr::eval;
using odeinv::expr::evalExact;
using odeinv::expr::parse;
using odeinv::expr::Polynomial;
using odeinv::expr::Rational;
using odeinv::ode::makeODE;
using odeinv::ode::PointMap;

namespace {

const odeinv::expr::Box kUnit{-1.0, 1.0, -1.0, 1.0};

// a0 = y^2, a3 = x^2. Reference values from an independent CAS expansion.
CubicODE fixture() { return makeODE(parse("y^2"), 0, 0, parse("x^2")); }

Rational exactAt(const Expr& e, int x, int y) {
  auto v = evalExact(e, Rational(x), Rational(y));
  REQUIRE(v);
  return *v;
}

bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * (1 + std::fabs(b)); }

}  // namespace

TEST_CASE("L1 and L2") {
  const auto [zero1, zero2] = relativeInvariantsL(makeODE(0));
  CHECK(zero1.isZero());
  CHECK(zero2.isZero());
  const auto [c1, c2] = relativeInvariantsL(makeODE(Expr(3), Expr(Rational(-1, 2)), Expr(7), Expr(2)));
  CHECK(c1.isZero());
  CHECK(c2.isZero());

  const auto [L1, L2] = relativeInvariantsL(fixture());
  CHECK(Polynomial::fromExpr(L1) == Polynomial::fromExpr(parse("6 + 12*x*y^2")));
  CHECK(Polynomial::fromExpr(L2) == Polynomial::fromExpr(parse("6 - 12*x^2*y")));
}

TEST_CASE("L3") {
  const CubicODE onlyA0 = makeODE(parse("y^2"));
  const auto [a1, a2] = relativeInvariantsL(onlyA0);
  CHECK(relativeInvariantL3(onlyA0, a1, a2).isZero());

  const CubicODE E = fixture();
  const auto [L1, L2] = relativeInvariantsL(E);
  const Expr L3 = relativeInvariantL3(E, L1, L2);
  CHECK(exactAt(L3, 1, 1) == 9504);
  CHECK(Polynomial::fromExpr(L3) ==
        Polynomial::fromExpr(parse("1728*x^6*y^5 + 1728*x^5*y^6 + 3024*x^3*y^2 + 3024*x^2*y^3 + 648*x^2 - 648*y^2")));
}

TEST_CASE("Psi") {
  const auto [z1, z2] = relativeInvariantsL(makeODE(0));
  const auto [p1, p2] = psiInvariants(makeODE(0), z1, z2);
  CHECK(p1.isZero());
  CHECK(p2.isZero());

  const CubicODE onlyA0 = makeODE(parse("y^2"));
  const auto [a1, a2] = relativeInvariantsL(onlyA0);
  const auto [q1, q2] = psiInvariants(onlyA0, a1, a2);
  CHECK(q1.isZero());
  CHECK(q2.isZero());

  const CubicODE E = fixture();
  const auto [L1, L2] = relativeInvariantsL(E);
  const auto [psi1, psi2] = psiInvariants(E, L1, L2);
  CHECK(exactAt(psi1, 1, 1) == -2052);
  CHECK(exactAt(psi2, 1, 1) == -900);
}

TEST_CASE("frame, density and scalar invariants of the fixture at (1, 1)") {
  const InvariantBundle B = computeInvariants(fixture());
  const Point2 p{1, 1};
  CHECK(eval(B.nuDensity, p) == doctest::Approx(6.2457023818155416).epsilon(1e-14));
  CHECK(eval(B.xi1[0], p) == doctest::Approx(-0.15381145460427553).epsilon(1e-13));
  CHECK(eval(B.xi1[1], p) == doctest::Approx(-0.46143436381282659).epsilon(1e-13));
  CHECK(eval(B.xi2[0], p) == doctest::Approx(-0.59144908918707780).epsilon(1e-13));
  CHECK(eval(B.xi2[1], p) == doctest::Approx(1.3485039233465374).epsilon(1e-13));
  CHECK(eval(B.I1, p) == doctest::Approx(-0.79702299204033684).epsilon(1e-12));
  CHECK(eval(B.I2, p) == doctest::Approx(0.79877887899665707).epsilon(1e-12));

  // nu < 0 where L3 < 0, e.g. at (0, 1): L3 = -648
  CHECK(eval(B.L3, {0, 1}) == -648.0);
  CHECK(eval(B.nuDensity, {0, 1}) == doctest::Approx(-std::pow(648.0, 0.2)));

  // the frame is a basis wherever L3 != 0
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Point2 q{u(rng), u(rng)};
    if (std::fabs(eval(B.L3, q)) < 1e-6) continue;
    const double det = eval(B.xi1[0], q) * eval(B.xi2[1], q) - eval(B.xi1[1], q) * eval(B.xi2[0], q);
    CHECK(det != 0.0);
  }
}

TEST_CASE("degenerate equations") {
  const CubicODE onlyA0 = makeODE(parse("y^2"));
  CHECK_THROWS_AS(invariantFrame(onlyA0), DegenerateOrbit);
  CHECK_THROWS_AS(liouvilleForm(onlyA0), DegenerateOrbit);
  CHECK_THROWS_AS(scalarInvariants(onlyA0), DegenerateOrbit);
  CHECK_THROWS_AS(computeInvariants(makeODE(0)), DegenerateOrbit);
}

TEST_CASE("classifyOrbit") {
  CHECK(classifyOrbit(makeODE(0)).level == OrbitLevel::Degenerate2);
  CHECK(classifyOrbit(makeODE(1, 2, 3, 4)).level == OrbitLevel::Degenerate2);
  CHECK(classifyOrbit(makeODE(parse("y^2"))).level == OrbitLevel::Degenerate3);
  CHECK(classifyOrbit(fixture()).level == OrbitLevel::GeneralPosition3);
  const OrbitClass at = classifyOrbit(fixture(), {1, 1});
  CHECK(at.level == OrbitLevel::GeneralPosition3);
  CHECK(at.pointwise);
  // at the origin L1 = L2 = 6 but L3 = 0
  CHECK(classifyOrbit(fixture(), {0, 0}).level == OrbitLevel::Degenerate3);
  CHECK(classifyOrbit(makeODE(0, 0, 0, parse("1/x")), {0, 0}).level == OrbitLevel::Undetermined);
}

TEST_CASE("Degenerate2 is invariant under point maps") {
  std::mt19937_64 rng(10);
  const CubicODE flat = makeODE(0);
  const CubicODE lin = makeODE(parse("x"), 0, 0, 0);
  for (int t = 0; t < 5; ++t) {
    const PointMap f = odeinv::ode::randomTestMap(rng, kUnit, t % 2 == 1);
    CHECK(classifyOrbit(odeinv::ode::pushforwardODE(flat, f)).level == OrbitLevel::Degenerate2);
    const bool before = classifyOrbit(lin).level == OrbitLevel::Degenerate2;
    const bool after = classifyOrbit(odeinv::ode::pushforwardODE(lin, f)).level == OrbitLevel::Degenerate2;
    CHECK(before == after);
    const CubicODE E = odeinv::ode::randomPolynomialODE(rng, 2);
    CHECK(classifyOrbit(E).level == classifyOrbit(odeinv::ode::pushforwardODE(E, f)).level);
  }
}

TEST_CASE("Lie derivative of nu along xi_i matches the flow") {
  const InvariantBundle B = computeInvariants(fixture());
  const std::array<const VectorField*, 2> fields{&B.xi1, &B.xi2};
  const std::array<const Expr*, 2> scalars{&B.I1, &B.I2};
  const std::vector<Point2> points{{1, 1}, {0.6, 0.9}, {-0.7, 0.3}, {0.4, -0.8}, {0.9, -0.2}};
  for (int k = 0; k < 2; ++k) {
    const VectorField& v = *fields[k];
    const odeinv::expr::Tape field = odeinv::expr::Tape::compile(v);
    auto flow = [&](Point2 p, double t) {
      // RK4 in 8 substeps
      const int n = 8;
      const double h = t / n;
      auto f = [&](Point2 q) {
        const auto d = field.evaluateAt(q);
        return Point2{d[0], d[1]};
      };
      for (int i = 0; i < n; ++i) {
        const Point2 k1 = f(p);
        const Point2 k2 = f({p.x + h / 2 * k1.x, p.y + h / 2 * k1.y});
        const Point2 k3 = f({p.x + h / 2 * k2.x, p.y + h / 2 * k2.y});
        const Point2 k4 = f({p.x + h * k3.x, p.y + h * k3.y});
        p = {p.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x), p.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y)};
      }
      return p;
    };
    // pulled-back density n(phi_t(p)) det Dphi_t(p)
    auto pulled = [&](Point2 p, double t) {
      const double d = 1e-4;
      const Point2 xp = flow({p.x + d, p.y}, t), xm = flow({p.x - d, p.y}, t);
      const Point2 yp = flow({p.x, p.y + d}, t), ym = flow({p.x, p.y - d}, t);
      const double det = ((xp.x - xm.x) * (yp.y - ym.y) - (xp.y - xm.y) * (yp.x - ym.x)) / (4 * d * d);
      return eval(B.nuDensity, flow(p, t)) * det;
    };
    for (const Point2 p : points) {
      const double t = 1e-3;
      const double fd = (pulled(p, t) - pulled(p, -t)) / (2 * t);
      const double exact = eval(*scalars[k], p) * eval(B.nuDensity, p);
      CHECK(close(fd, exact, 1e-4));
    }
  }
}

TEST_CASE("structural sanity: zero divergence and constant L3 give I = 0") {
  const Expr L3 = Expr(216);
  const VectorField xi{pow(L3, Rational(-2, 5)) * Expr(6), pow(L3, Rational(-2, 5)) * Expr(-6)};
  const Expr I = odeinv::expr::diff(xi[0], odeinv::expr::Var::X) + odeinv::expr::diff(xi[1], odeinv::expr::Var::Y) +
                 derivativeAlong(xi, L3) / (Expr(5) * L3);
  CHECK(I.isZero());
}

TEST_CASE("Tresse derivatives") {
  const InvariantBundle B = computeInvariants(fixture());
  SUBCASE("defining relation, exactly") {
    const auto [a, b] = tresseDerivative(B.I1, B);
    CHECK(a.isOne());
    CHECK(b.isZero());
    const auto [c, d] = tresseDerivative(B.I2, B);
    CHECK(c.isZero());
    CHECK(d.isOne());
  }
  const std::vector<Point2> points{{1, 1}, {0.6, 0.9}, {-0.7, 0.3}, {0.4, -0.8}};
  SUBCASE("Leibniz: h = I1 I2 gives (I2, I1)") {
    for (const Point2 p : points) {
      const auto d = tresseDerivativeAt(B.I1 * B.I2, B, p);
      CHECK(close(d[0], eval(B.I2, p), 1e-9));
      CHECK(close(d[1], eval(B.I1, p), 1e-9));
    }
  }
  SUBCASE("h = a0 against differences along level sets") {
    const Expr h = fixture().a0();
    using odeinv::expr::diff;
    using odeinv::expr::Var;
    for (const Point2 p : points) {
      const auto d = tresseDerivativeAt(h, B, p);
      // along the level set of I2, dh = (dh/dI1) dI1, and vice versa
      auto along = [&](const Expr& keep, const Expr& vary) {
        const double vx = eval(diff(keep, Var::Y), p), vy = -eval(diff(keep, Var::X), p);
        const double s = 1e-4 / std::hypot(vx, vy);
        const Point2 a{p.x + s * vx, p.y + s * vy}, b{p.x - s * vx, p.y - s * vy};
        return (eval(h, a) - eval(h, b)) / (eval(vary, a) - eval(vary, b));
      };
      CHECK(close(d[0], along(B.I2, B.I1), 1e-6));
      CHECK(close(d[1], along(B.I1, B.I2), 1e-6));
      // reconstruction of dh
      const double hx = eval(diff(h, Var::X), p), hy = eval(diff(h, Var::Y), p);
      CHECK(close(d[0] * eval(diff(B.I1, Var::X), p) + d[1] * eval(diff(B.I2, Var::X), p), hx, 1e-9));
      CHECK(close(d[0] * eval(diff(B.I1, Var::Y), p) + d[1] * eval(diff(B.I2, Var::Y), p), hy, 1e-9));
    }
  }
  SUBCASE("singular system") {
    // I1 = I2 = 0 in an empty bundle
    CHECK_THROWS_AS(tresseDerivativeAt(Expr::x(), InvariantBundle{}, {0, 0}), NotInGeneralPosition);
  }
}
