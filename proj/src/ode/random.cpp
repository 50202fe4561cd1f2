#include "odeinv/ode/random.hpp"

#include "odeinv/expr/polynomial.hpp"

namespace odeinv::ode {

using expr::Rational;

namespace {

/// Multiples of 1/4 in [-2, 2].
Rational quarter(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-8, 8);
  Rational r(k(rng), 4);
  r.canonicalize();
  return r;
}

struct Affine {
  Rational a, b, c, d, e, f;  // (a x + b y + e, c x + d y + f)

  Rational det() const { return a * d - b * c; }

  std::array<Expr, 2> apply(const Expr& x, const Expr& y) const {
    return {Expr(a) * x + Expr(b) * y + Expr(e), Expr(c) * x + Expr(d) * y + Expr(f)};
  }

  Affine inverse() const {
    const Rational k = det();
    Affine inv{d / k, -b / k, -c / k, a / k, 0, 0};
    inv.e = -(inv.a * e + inv.b * f);
    inv.f = -(inv.c * e + inv.d * f);
    return inv;
  }
};

Affine randomAffine(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> entry(-4, 4);
  std::uniform_int_distribution<int> shift(-2, 2);
  for (;;) {
    Affine m{Rational(entry(rng), 4), Rational(entry(rng), 4), Rational(entry(rng), 4), Rational(entry(rng), 4),
             Rational(shift(rng), 4), Rational(shift(rng), 4)};
    for (Rational* r : {&m.a, &m.b, &m.c, &m.d, &m.e, &m.f}) r->canonicalize();
    // keep the map well conditioned: |det| in [1/2, 2] and no tiny singular value
    const Rational det = m.det();
    const Rational absDet = det < 0 ? Rational(-det) : det;
    const Rational frob = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
    if (absDet >= Rational(1, 2) && absDet <= 2 && frob <= 4 * absDet) return m;
  }
}

Expr expand(const Expr& e) { return expr::Polynomial::fromExpr(e)->toExpr(); }

}  // namespace

Expr randomPolynomial(std::mt19937_64& rng, int degree) {
  std::uniform_int_distribution<int> keep(0, 2);
  std::vector<Expr> terms;
  for (int total = 0; total <= degree; ++total) {
    for (int i = total; i >= 0; --i) {
      const Rational c = quarter(rng);
      if (keep(rng) == 0 || c == 0) continue;
      terms.push_back(Expr(c) * pow(Expr::x(), i) * pow(Expr::y(), total - i));
    }
  }
  return Expr::sum(std::move(terms));
}

CubicODE randomPolynomialODE(std::mt19937_64& rng, int degree) {
  CubicODE E;
  for (auto& c : E.a) c = randomPolynomial(rng, degree);
  return E;
}

PointMap randomTestMap(std::mt19937_64& rng, const Box& domain, bool cubic) {
  const Affine a1 = randomAffine(rng);
  const Affine a2 = randomAffine(rng);
  Rational c(0);
  if (cubic) {
    std::uniform_int_distribution<int> k(1, 3);
    std::bernoulli_distribution negative(0.5);
    c = Rational(negative(rng) ? -k(rng) : k(rng), 20);
    c.canonicalize();
  }
  const Expr x = Expr::x();
  const Expr y = Expr::y();
  // forward: a2(shear(a1(x, y)))
  const auto u = a1.apply(x, y);
  const auto s = std::array<Expr, 2>{u[0] + Expr(c) * pow(u[1], 3), u[1]};
  const auto fwd = a2.apply(s[0], s[1]);
  // inverse: a1^-1(shear^-1(a2^-1(x, y)))
  const auto v = a2.inverse().apply(x, y);
  const auto t = std::array<Expr, 2>{v[0] - Expr(c) * pow(v[1], 3), v[1]};
  const auto inv = a1.inverse().apply(t[0], t[1]);
  return PointMap::make(expand(fwd[0]), expand(fwd[1]), expand(inv[0]), expand(inv[1]), domain);
}

}  // namespace odeinv::ode
