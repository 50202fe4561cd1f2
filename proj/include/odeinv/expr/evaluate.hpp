#pragma once

#include "odeinv/expr/expr.hpp"

#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace odeinv::expr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(Point2, Point2) = default;
};

enum class EvalErrorKind { DivisionByZero, EvenRootOfNegative, Overflow };

class EvalError : public std::domain_error {
 public:
  EvalError(EvalErrorKind kind, const std::string& what) : std::domain_error(what), kind_(kind) {}
  EvalErrorKind kind() const { return kind_; }

 private:
  EvalErrorKind kind_;
};

std::string errorName(EvalErrorKind kind);

struct EvalOptions {
  /// Negative powers of bases with |base| below this raise DivisionByZero.
  double denominatorGuard = 0.0;
};

/// Floating-point evaluation with real odd-root semantics:
/// b^(p/q) = sign(b)^p |b|^(p/q) for odd q.
double eval(const Expr& e, Point2 p, const EvalOptions& options = {});

/// Exact evaluation at a rational point. nullopt when a power has no
/// rational value there or a denominator vanishes.
std::optional<Rational> evalExact(const Expr& e, const Rational& x, const Rational& y);

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Box {
  double x0 = -2.0;
  double x1 = 2.0;
  double y0 = -2.0;
  double y1 = 2.0;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Probabilistic identity test: true iff |e1 - e2| <= tol (1 + max(|e1|,|e2|))
/// at `trials` seeded random points of `box` where both are defined.
/// Throws SamplingError (AllPointsSingular) when fewer than `trials` valid
/// points turn up in 100 * trials draws.
bool equivalentExpr(const Expr& e1, const Expr& e2, int trials, double tol, std::mt19937_64& rng,
                    const Box& box = {});

enum class ZeroTest { Zero, NonZero, Unknown };

/// Decides whether `e` vanishes identically. Exact for polynomials
/// (exact evaluation, then expansion); Schwartz-Zippel with exact
/// arithmetic for rational functions; Unknown for fractional powers unless
/// a float sample is clearly nonzero.
ZeroTest isIdenticallyZero(const Expr& e);

}  // namespace odeinv::expr
