#pragma once

#include "odeinv/expr/expr.hpp"

#include <array>
#include <random>

namespace odeinv::testing {

/// Random expression trees for property tests. With `raw` the tree is built
/// verbatim (unsimplified), which is what simplify() tests need.
inline expr::Expr randomExpr(std::mt19937_64& rng, int depth, bool raw = false) {
  using expr::Expr;
  using expr::Rational;
  std::uniform_int_distribution<int> pick(0, 99);
  const int leafChance = depth <= 0 ? 100 : 30;
  if (pick(rng) < leafChance) {
    const int k = pick(rng);
    if (k < 35) return Expr::x();
    if (k < 70) return Expr::y();
    std::uniform_int_distribution<int> num(-3, 3);
    std::uniform_int_distribution<int> den(1, 3);
    Rational c(num(rng), den(rng));
    c.canonicalize();
    return Expr(c);
  }
  static const std::array<Rational, 10> exponents = {Rational(2),    Rational(3),    Rational(-1),   Rational(-2),
                                                     Rational(1, 3), Rational(2, 3), Rational(1, 5), Rational(-2, 5),
                                                     Rational(4, 5), Rational(-1, 3)};
  const int k = pick(rng);
  if (k < 40) {
    std::vector<Expr> ops;
    const int n = 2 + pick(rng) % 2;
    for (int i = 0; i < n; ++i) ops.push_back(randomExpr(rng, depth - 1, raw));
    return raw ? Expr::rawSum(std::move(ops)) : Expr::sum(std::move(ops));
  }
  if (k < 75) {
    std::vector<Expr> ops;
    const int n = 2 + pick(rng) % 2;
    for (int i = 0; i < n; ++i) ops.push_back(randomExpr(rng, depth - 1, raw));
    return raw ? Expr::rawProduct(std::move(ops)) : Expr::product(std::move(ops));
  }
  const Rational& r = exponents[static_cast<std::size_t>(pick(rng)) % exponents.size()];
  Expr base = randomExpr(rng, depth - 1, raw);
  return raw ? Expr::rawPower(base, r) : Expr::power(base, r);
}

}  // namespace odeinv::testing
