#include "odeinv/expr/real_power.hpp"
#include "odeinv/expr/tape.hpp"

#include <cmath>

namespace odeinv::expr::detail {

void runBlockScalar(const BlockArgs& args) {
  constexpr std::size_t B = Tape::kBlock;
  for (std::size_t i = 0; i < args.codeSize; ++i) {
    const Instruction& ins = args.code[i];
    double* dst = args.slots + ins.dst * B;
    const double* a = args.slots + ins.a * B;
    const double* b = args.slots + ins.b * B;
    switch (ins.op) {
      case OpCode::LoadConst:
        for (std::size_t l = 0; l < B; ++l) dst[l] = args.constants[ins.a];
        continue;
      case OpCode::LoadX:
        for (std::size_t l = 0; l < B; ++l) dst[l] = args.xs[l];
        continue;
      case OpCode::LoadY:
        for (std::size_t l = 0; l < B; ++l) dst[l] = args.ys[l];
        continue;
      case OpCode::Add:
        for (std::size_t l = 0; l < B; ++l) dst[l] = a[l] + b[l];
        break;
      case OpCode::Mul:
        for (std::size_t l = 0; l < B; ++l) dst[l] = a[l] * b[l];
        break;
      case OpCode::PowInt:
        for (std::size_t l = 0; l < B; ++l) dst[l] = intPow(a[l], ins.p);
        break;
      case OpCode::PowNegInt:
        for (std::size_t l = 0; l < B; ++l) {
          const double base = a[l];
          if (base == 0.0 || std::fabs(base) < args.guard) args.status[l] |= kStatusDivisionByZero;
          dst[l] = 1.0 / intPow(base, ins.p);
        }
        break;
      case OpCode::PowFrac:
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
    for (std::size_t l = 0; l < B; ++l)
      if (!std::isfinite(dst[l])) args.status[l] |= kStatusOverflow;
  }
}

}  // namespace odeinv::expr::detail
