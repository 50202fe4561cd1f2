// Compiled with -mavx2. Must not be entered unless avx2Available().
#include "odeinv/expr/real_power.hpp"
#include "odeinv/expr/tape.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace odeinv::expr::detail {

namespace {

constexpr std::size_t B = Tape::kBlock;
static_assert(B % 4 == 0, "block must hold whole AVX2 vectors");

// Same multiplication order as intPow().
inline __m256d intPow4(__m256d base, int n) {
  __m256d result = _mm256_set1_pd(1.0);
  __m256d sq = base;
  bool first = true;
  while (n > 0) {
    if (n & 1) {
      result = first ? sq : _mm256_mul_pd(result, sq);
      first = false;
    }
    n >>= 1;
    if (n > 0) sq = _mm256_mul_pd(sq, sq);
  }
  return result;
}

inline void orStatus(std::uint8_t* status, __m256d mask, std::uint8_t bit) {
  const int m = _mm256_movemask_pd(mask);
  if (m == 0) return;
  for (int l = 0; l < 4; ++l)
    if (m & (1 << l)) status[l] |= bit;
}

}  // namespace

void runBlockAvx2(const BlockArgs& args) {
  const __m256d signMask = _mm256_set1_pd(-0.0);
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d guard = _mm256_set1_pd(args.guard);
  for (std::size_t i = 0; i < args.codeSize; ++i) {
    const Instruction& ins = args.code[i];
    double* dst = args.slots + ins.dst * B;
    const double* a = args.slots + ins.a * B;
    const double* b = args.slots + ins.b * B;
    switch (ins.op) {
      case OpCode::LoadConst: {
        const __m256d c = _mm256_set1_pd(args.constants[ins.a]);
        for (std::size_t l = 0; l < B; l += 4) _mm256_storeu_pd(dst + l, c);
        continue;
      }
      case OpCode::LoadX:
        for (std::size_t l = 0; l < B; l += 4) _mm256_storeu_pd(dst + l, _mm256_loadu_pd(args.xs + l));
        continue;
      case OpCode::LoadY:
        for (std::size_t l = 0; l < B; l += 4) _mm256_storeu_pd(dst + l, _mm256_loadu_pd(args.ys + l));
        continue;
      case OpCode::Add:
        for (std::size_t l = 0; l < B; l += 4)
          _mm256_storeu_pd(dst + l, _mm256_add_pd(_mm256_loadu_pd(a + l), _mm256_loadu_pd(b + l)));
        break;
      case OpCode::Mul:
        for (std::size_t l = 0; l < B; l += 4)
          _mm256_storeu_pd(dst + l, _mm256_mul_pd(_mm256_loadu_pd(a + l), _mm256_loadu_pd(b + l)));
        break;
      case OpCode::PowInt:
        for (std::size_t l = 0; l < B; l += 4) _mm256_storeu_pd(dst + l, intPow4(_mm256_loadu_pd(a + l), ins.p));
        break;
      case OpCode::PowNegInt:
        for (std::size_t l = 0; l < B; l += 4) {
          const __m256d base = _mm256_loadu_pd(a + l);
          const __m256d absBase = _mm256_andnot_pd(signMask, base);
          const __m256d bad = _mm256_or_pd(_mm256_cmp_pd(base, zero, _CMP_EQ_OQ), _mm256_cmp_pd(absBase, guard, _CMP_LT_OQ));
          orStatus(args.status + l, bad, kStatusDivisionByZero);
          _mm256_storeu_pd(dst + l, _mm256_div_pd(one, intPow4(base, ins.p)));
        }
        break;
      case OpCode::PowFrac:
        // libm pow per lane, shared with the scalar kernel.
        for (std::size_t l = 0; l < B; ++l) {
          const double base = a[l];
          if (ins.p < 0 && (base == 0.0 || std::fabs(base) < args.guard)) args.status[l] |= kStatusDivisionByZero;
          if (ins.q % 2 == 0 && base < 0.0) args.status[l] |= kStatusEvenRootOfNegative;
          double v = fractionalPowAbs(std::fabs(base), ins.p, ins.q);
          if (base < 0.0 && (ins.p % 2 != 0)) v = -v;
          dst[l] = v;
        }
        break;
    }
    for (std::size_t l = 0; l < B; l += 4) {
      const __m256d v = _mm256_andnot_pd(signMask, _mm256_loadu_pd(dst + l));
      orStatus(args.status + l, _mm256_cmp_pd(v, inf, _CMP_NLT_UQ), kStatusOverflow);
    }
  }
}

}  // namespace odeinv::expr::detail
