#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>

namespace odeinv::expr {

/// Exact arbitrary-precision rational used for all constants and exponents.
using Rational = mpq_class;

inline bool isInteger(const Rational& r) { return r.get_den() == 1; }

/// Converts to a machine int; the caller guarantees the value fits.
inline int toInt(const mpz_class& z) { return static_cast<int>(z.get_si()); }

inline double toDouble(const Rational& r) { return r.get_d(); }

/// Exact conversion of a finite double (every finite double is a dyadic rational).
inline Rational fromDouble(double v) {
  Rational r(v);
  r.canonicalize();
  return r;
}

/// r^n for integer n; nullopt when r == 0 and n < 0.
std::optional<Rational> powInteger(const Rational& r, long n);

/// Exact real-root power r^(p/q) under odd-root semantics, when the result is
/// rational. nullopt for irrational results, even roots of negatives and
/// division by zero.
std::optional<Rational> powExact(const Rational& r, const Rational& exponent);

std::string rationalString(const Rational& r);

}  // namespace odeinv::expr
