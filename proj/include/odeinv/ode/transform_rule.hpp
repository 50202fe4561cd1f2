#pragma once

#include <array>
#include <vector>

namespace odeinv::ode {

/// First and second partials of the inverse map g = (gx, gy) at a target
/// point, in target coordinates.
template <class T>
struct InverseJet {
  T gx_x, gx_y, gy_x, gy_y;
  T gx_xx, gx_xy, gx_yy;
  T gy_xx, gy_xy, gy_yy;
};

template <class T>
T jetDeterminant(const InverseJet<T>& j) {
  return j.gx_x * j.gy_y - j.gx_y * j.gy_x;
}

namespace detail {

template <class T>
std::vector<T> polyMul(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out(a.size() + b.size() - 1, T(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] = out[i + j] + a[i] * b[j];
  return out;
}

template <class T>
void polyAddScaled(std::vector<T>& acc, const std::vector<T>& b, const T& scale) {
  if (acc.size() < b.size()) acc.resize(b.size(), T(0));
  for (std::size_t i = 0; i < b.size(); ++i) acc[i] = acc[i] + scale * b[i];
}

}  // namespace detail

/// Coefficients (lowest first, in the new slope q) of
///
///   sum_i a_i M^i K^(3-i) - G2y K + M G2x,
///
/// with K = gx_x + gx_y q, M = gy_x + gy_y q and G2x, G2y the second
/// derivatives of gx, gy along (1, q). Divided by the jet determinant this
/// is the transformed right-hand side. `a` holds the old coefficients at
/// g(target). Works for any ring-like T (symbolic or floating).
template <class T, class IsZero>
std::vector<T> transformedNumerator(const std::array<T, 4>& a, const InverseJet<T>& j, IsZero isZero) {
  using V = std::vector<T>;
  const V K{j.gx_x, j.gx_y};
  const V M{j.gy_x, j.gy_y};
  const V G2x{j.gx_xx, T(2) * j.gx_xy, j.gx_yy};
  const V G2y{j.gy_xx, T(2) * j.gy_xy, j.gy_yy};
  std::array<V, 4> kPow{V{T(1)}, K, detail::polyMul(K, K), V{}};
  kPow[3] = detail::polyMul(kPow[2], K);
  std::array<V, 4> mPow{V{T(1)}, M, detail::polyMul(M, M), V{}};
  mPow[3] = detail::polyMul(mPow[2], M);
  V num;
  for (int i = 0; i < 4; ++i) {
    if (isZero(a[i])) continue;
    detail::polyAddScaled(num, detail::polyMul(mPow[i], kPow[3 - i]), a[i]);
  }
  detail::polyAddScaled(num, detail::polyMul(G2y, K), T(-1));
  detail::polyAddScaled(num, detail::polyMul(M, G2x), T(1));
  return num;
}

/// Numeric transformed coefficients. The caller guarantees a nonzero
/// determinant.
inline std::array<double, 4> transformedCoefficients(const std::array<double, 4>& a, const InverseJet<double>& j) {
  const auto num = transformedNumerator(a, j, [](double) { return false; });
  const double det = jetDeterminant(j);
  return {num[0] / det, num[1] / det, num[2] / det, num[3] / det};
}

}  // namespace odeinv::ode
