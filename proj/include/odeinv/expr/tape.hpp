#pragma once

#include "odeinv/expr/evaluate.hpp"
#include "odeinv/expr/expr.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace odeinv::expr {

/// Kernel selection for batch evaluation. Auto picks AVX2 when the CPU has
/// it and the build includes the AVX2 kernel.
enum class Backend { Auto, Scalar, Avx2 };

std::string_view backendName(Backend b);
bool avx2Available();
Backend resolve(Backend requested);

/// Per-point status bits reported by Tape::evaluate.
enum EvalStatus : std::uint8_t {
  kStatusOk = 0,
  kStatusDivisionByZero = 1,
  kStatusEvenRootOfNegative = 2,
  kStatusOverflow = 4,
};

enum class OpCode : std::uint8_t { LoadConst, LoadX, LoadY, Add, Mul, PowInt, PowNegInt, PowFrac };

struct Instruction {
  OpCode op;
  std::uint32_t dst;
  std::uint32_t a;  // operand slot, or constant index for LoadConst
  std::uint32_t b;
  std::int32_t p;   // exponent numerator
  std::int32_t q;   // exponent denominator
};

/// A set of expressions compiled to straight-line code with common
/// subexpressions shared and slots recycled. Evaluation uses exactly the
/// operation order of eval(), so results agree with it bit for bit.
class Tape {
 public:
  static constexpr std::size_t kBlock = 8;

  Tape() = default;
  static Tape compile(std::span<const Expr> outputs);

  std::size_t outputCount() const { return outputSlots_.size(); }
  std::size_t instructionCount() const { return code_.size(); }
  std::size_t slotCount() const { return slotCount_; }
  std::span<const Instruction> code() const { return code_; }
  std::span<const double> constants() const { return constants_; }

  /// Evaluates every output at the points (xs[i], ys[i]). `out` is laid out
  /// output-major: out[k * n + i] is output k at point i. `status[i]` gets
  /// the EvalStatus bits of point i; outputs at flagged points are
  /// unspecified.
  void evaluate(std::span<const double> xs, std::span<const double> ys, std::span<double> out,
                std::span<std::uint8_t> status, Backend backend = Backend::Auto,
                const EvalOptions& options = {}) const;

  /// Single-point convenience; throws EvalError like eval().
  std::vector<double> evaluateAt(Point2 p, const EvalOptions& options = {}) const;

 private:
  std::vector<Instruction> code_;
  std::vector<double> constants_;
  std::vector<std::uint32_t> outputSlots_;
  std::size_t slotCount_ = 0;
};

namespace detail {

struct BlockArgs {
  const Instruction* code;
  std::size_t codeSize;
  const double* constants;
  const double* xs;  // kBlock entries
  const double* ys;  // kBlock entries
  double* slots;     // slotCount * kBlock entries
  std::uint8_t* status;  // kBlock entries, accumulated
  double guard;
};

void runBlockScalar(const BlockArgs& args);
#if defined(ODEINV_HAVE_AVX2)
void runBlockAvx2(const BlockArgs& args);
#endif

}  // namespace detail

}  // namespace odeinv::expr
