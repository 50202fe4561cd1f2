#pragma once

#include <cmath>

namespace odeinv::expr {

/// b^n for n >= 0 by binary powering. The multiplication order is fixed so
/// that scalar and vector kernels agree bit for bit.
inline double intPow(double b, int n) {
  double result = 1.0;
  double sq = b;
  bool first = true;
  while (n > 0) {
    if (n & 1) {
      result = first ? sq : result * sq;
      first = false;
    }
    n >>= 1;
    if (n > 0) sq = sq * sq;
  }
  return result;
}

/// |b|^(p/q) for q > 1; the caller applies the sign and domain rules.
inline double fractionalPowAbs(double absBase, int p, int q) {
  return std::pow(absBase, static_cast<double>(p) / static_cast<double>(q));
}

}  // namespace odeinv::expr
