#include "odeinv/expr/evaluate.hpp"

#include "odeinv/expr/polynomial.hpp"
#include "odeinv/expr/real_power.hpp"

#include <cmath>
#include <unordered_map>

namespace odeinv::expr {

std::string errorName(EvalErrorKind kind) {
  switch (kind) {
    case EvalErrorKind::DivisionByZero: return "DivisionByZero";
    case EvalErrorKind::EvenRootOfNegative: return "EvenRootOfNegative";
    case EvalErrorKind::Overflow: return "Overflow";
  }
  return "EvalError";
}

namespace {

double powerValue(double b, const Rational& exponent, double guard) {
  const int p = toInt(exponent.get_num());
  const int q = toInt(exponent.get_den());
  if (p < 0 && (b == 0.0 || std::fabs(b) < guard))
    throw EvalError(EvalErrorKind::DivisionByZero, "negative power of a vanishing base");
  if (q == 1) return p >= 0 ? intPow(b, p) : 1.0 / intPow(b, -p);
  if (q % 2 == 0 && b < 0.0) throw EvalError(EvalErrorKind::EvenRootOfNegative, "even root of a negative base");
  double v = fractionalPowAbs(std::fabs(b), p, q);
  if (b < 0.0 && (p % 2 != 0)) v = -v;
  return v;
}

}  // namespace

double eval(const Expr& e, Point2 p, const EvalOptions& options) {
  std::unordered_map<const Node*, double> memo;
  auto rec = [&](auto&& self, const Expr& node) -> double {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second;
    double v = 0.0;
    switch (node.kind()) {
      case Kind::Const: v = toDouble(node.value()); break;
      case Kind::Var: v = node.variable() == Var::X ? p.x : p.y; break;
      case Kind::Sum: {
        auto ops = node.operands();
        v = self(self, ops[0]);
        for (std::size_t i = 1; i < ops.size(); ++i) v = v + self(self, ops[i]);
        break;
      }
      case Kind::Product: {
        auto ops = node.operands();
        v = self(self, ops[0]);
        for (std::size_t i = 1; i < ops.size(); ++i) v = v * self(self, ops[i]);
        break;
      }
      case Kind::Power: v = powerValue(self(self, node.base()), node.exponent(), options.denominatorGuard); break;
    }
    if (!std::isfinite(v)) throw EvalError(EvalErrorKind::Overflow, "non-finite intermediate value");
    memo.emplace(node.id(), v);
    return v;
  };
  return rec(rec, e);
}

std::optional<Rational> evalExact(const Expr& e, const Rational& x, const Rational& y) {
  std::unordered_map<const Node*, std::optional<Rational>> memo;
  auto rec = [&](auto&& self, const Expr& node) -> std::optional<Rational> {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second;
    std::optional<Rational> v;
    switch (node.kind()) {
      case Kind::Const: v = node.value(); break;
      case Kind::Var: v = node.variable() == Var::X ? x : y; break;
      case Kind::Sum: {
        Rational acc(0);
        bool ok = true;
        for (const auto& t : node.operands()) {
          auto tv = self(self, t);
          if (!tv) {
            ok = false;
            break;
          }
          acc += *tv;
        }
        if (ok) v = acc;
        break;
      }
      case Kind::Product: {
        Rational acc(1);
        bool ok = true;
        for (const auto& f : node.operands()) {
          auto fv = self(self, f);
          if (!fv) {
            ok = false;
            break;
          }
          acc *= *fv;
        }
        if (ok) v = acc;
        break;
      }
      case Kind::Power: {
        auto b = self(self, node.base());
        if (b) v = powExact(*b, node.exponent());
        break;
      }
    }
    memo.emplace(node.id(), v);
    return v;
  };
  return rec(rec, e);
}

bool equivalentExpr(const Expr& e1, const Expr& e2, int trials, double tol, std::mt19937_64& rng, const Box& box) {
  if (trials < 1) throw std::invalid_argument("equivalentExpr: trials must be >= 1");
  std::uniform_real_distribution<double> ux(box.x0, box.x1);
  std::uniform_real_distribution<double> uy(box.y0, box.y1);
  const EvalOptions guarded{1e-8};
  int valid = 0;
  const long maxDraws = 100L * trials;
  for (long draw = 0; draw < maxDraws && valid < trials; ++draw) {
    const Point2 p{ux(rng), uy(rng)};
    double v1 = 0.0;
    double v2 = 0.0;
    try {
      v1 = eval(e1, p, guarded);
      v2 = eval(e2, p, guarded);
    } catch (const EvalError&) {
      continue;
    }
    ++valid;
    if (std::fabs(v1 - v2) > tol * (1.0 + std::max(std::fabs(v1), std::fabs(v2)))) return false;
  }
  if (valid < trials) throw SamplingError("AllPointsSingular: no valid sample point found");
  return true;
}

ZeroTest isIdenticallyZero(const Expr& e) {
  const Expr s = simplify(e);
  if (s.isZero()) return ZeroTest::Zero;
  if (s.isConstant()) return ZeroTest::NonZero;
  std::mt19937_64 rng(0x5eed);
  if (hasOnlyIntegerPowers(s)) {
    std::uniform_int_distribution<long> num(-1000, 1000);
    std::uniform_int_distribution<long> den(1, 997);
    int defined = 0;
    for (int i = 0; i < 8; ++i) {
      Rational x(num(rng), den(rng));
      Rational y(num(rng), den(rng));
      x.canonicalize();
      y.canonicalize();
      auto v = evalExact(s, x, y);
      if (!v) continue;
      ++defined;
      if (*v != 0) return ZeroTest::NonZero;
    }
    if (isPolynomial(s)) return Polynomial::fromExpr(s)->isZero() ? ZeroTest::Zero : ZeroTest::NonZero;
    // A nonzero numerator of degree d vanishes at a random point of this
    // sample set with probability below d / 1e6.
    return defined >= 4 ? ZeroTest::Zero : ZeroTest::Unknown;
  }
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 16; ++i) {
    try {
      if (std::fabs(eval(s, {u(rng), u(rng)})) > 1e-8) return ZeroTest::NonZero;
    } catch (const EvalError&) {
    }
  }
  return ZeroTest::Unknown;
}

}  // namespace odeinv::expr
