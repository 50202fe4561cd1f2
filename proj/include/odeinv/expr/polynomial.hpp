#pragma once

#include "odeinv/expr/expr.hpp"

#include <map>
#include <optional>
#include <utility>

namespace odeinv::expr {

/// Expanded bivariate polynomial with exact rational coefficients.
/// The canonical form used for exact zero tests and for printing
/// polynomial results.
class Polynomial {
 public:
  /// (degree in x, degree in y)
  using Monomial = std::pair<int, int>;

  Polynomial() = default;
  explicit Polynomial(const Rational& c);
  static Polynomial monomial(const Rational& c, int dx, int dy);

  /// Expands `e`; nullopt if `e` is not a polynomial in x, y.
  static std::optional<Polynomial> fromExpr(const Expr& e);
  Expr toExpr() const;

  bool isZero() const { return terms_.empty(); }
  int totalDegree() const;
  Rational coefficient(int dx, int dy) const;
  const std::map<Monomial, Rational>& terms() const { return terms_; }

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial pow(unsigned n) const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

 private:
  void add(const Monomial& m, const Rational& c);
  std::map<Monomial, Rational> terms_;
};

}  // namespace odeinv::expr
