#include "odeinv/expr/tape.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace odeinv::expr {

std::string_view backendName(Backend b) {
  switch (b) {
    case Backend::Auto: return "auto";
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

bool avx2Available() {
#if defined(ODEINV_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend resolve(Backend requested) {
  if (requested == Backend::Auto) return avx2Available() ? Backend::Avx2 : Backend::Scalar;
  if (requested == Backend::Avx2 && !avx2Available()) throw std::runtime_error("AVX2 kernel not available on this host");
  return requested;
}

namespace {

bool isLeaf(const Expr& e) { return e.kind() == Kind::Const || e.kind() == Kind::Var; }

class Compiler {
 public:
  std::uint32_t emit(const Expr& e) {
    if (auto it = byNode_.find(e.id()); it != byNode_.end()) return it->second;
    if (auto it = byValue_.find(e); it != byValue_.end()) {
      byNode_.emplace(e.id(), it->second);
      return it->second;
    }
    std::uint32_t v = 0;
    switch (e.kind()) {
      case Kind::Const: {
        constants_.push_back(toDouble(e.value()));
        v = push({OpCode::LoadConst, 0, static_cast<std::uint32_t>(constants_.size() - 1), 0, 0, 0});
        break;
      }
      case Kind::Var: v = push({e.variable() == Var::X ? OpCode::LoadX : OpCode::LoadY, 0, 0, 0, 0, 0}); break;
      case Kind::Sum:
      case Kind::Product: {
        const OpCode op = e.kind() == Kind::Sum ? OpCode::Add : OpCode::Mul;
        auto ops = e.operands();
        std::size_t next = 1;
        if (isLeaf(ops[0]) && ops.size() > 1) {
          // load a leading leaf after its partner so it is not held live
          // across a deep subtree
          const std::uint32_t rhs = emit(ops[1]);
          v = push({op, 0, emit(ops[0]), rhs, 0, 0});
          next = 2;
        } else {
          v = emit(ops[0]);
        }
        for (std::size_t i = next; i < ops.size(); ++i) {
          const std::uint32_t rhs = emit(ops[i]);
          v = push({op, 0, v, rhs, 0, 0});
        }
        break;
      }
      case Kind::Power: {
        const std::uint32_t b = emit(e.base());
        const int p = toInt(e.exponent().get_num());
        const int q = toInt(e.exponent().get_den());
        if (q != 1) {
          v = push({OpCode::PowFrac, 0, b, 0, p, q});
        } else if (p >= 0) {
          v = push({OpCode::PowInt, 0, b, 0, p, 1});
        } else {
          v = push({OpCode::PowNegInt, 0, b, 0, -p, 1});
        }
        break;
      }
    }
    byNode_.emplace(e.id(), v);
    byValue_.emplace(e, v);
    return v;
  }

  /// Assigns slots by liveness; instruction dst/a/b become slot indices.
  void finish(std::vector<std::uint32_t> outputs, std::vector<Instruction>& code, std::vector<double>& constants,
              std::vector<std::uint32_t>& outputSlots, std::size_t& slotCount) {
    const std::size_t n = code_.size();
    constexpr std::size_t kForever = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> lastUse(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const Instruction& ins = code_[i];
      if (ins.op == OpCode::Add || ins.op == OpCode::Mul) {
        lastUse[ins.a] = i;
        lastUse[ins.b] = i;
      } else if (ins.op == OpCode::PowInt || ins.op == OpCode::PowNegInt || ins.op == OpCode::PowFrac) {
        lastUse[ins.a] = i;
      }
    }
    for (auto o : outputs) lastUse[o] = kForever;

    std::vector<std::uint32_t> slotOf(n, 0);
    std::vector<std::uint32_t> freeSlots;
    std::uint32_t nextSlot = 0;
    code = code_;
    for (std::size_t i = 0; i < n; ++i) {
      Instruction& ins = code[i];
      const bool binary = ins.op == OpCode::Add || ins.op == OpCode::Mul;
      const bool unary = ins.op == OpCode::PowInt || ins.op == OpCode::PowNegInt || ins.op == OpCode::PowFrac;
      if (binary) {
        ins.a = slotOf[code_[i].a];
        ins.b = slotOf[code_[i].b];
      } else if (unary) {
        ins.a = slotOf[code_[i].a];
      }
      // Operands whose last use is here are released before the result is
      // placed; kernels read operands before writing dst.
      if (binary || unary) {
        if (lastUse[code_[i].a] == i) freeSlots.push_back(slotOf[code_[i].a]);
        if (binary && code_[i].b != code_[i].a && lastUse[code_[i].b] == i) freeSlots.push_back(slotOf[code_[i].b]);
      }
      std::uint32_t slot;
      if (!freeSlots.empty()) {
        slot = freeSlots.back();
        freeSlots.pop_back();
      } else {
        slot = nextSlot++;
      }
      slotOf[i] = slot;
      ins.dst = slot;
      if (lastUse[i] == 0) freeSlots.push_back(slot);  // never read
    }
    constants = constants_;
    outputSlots.clear();
    for (auto o : outputs) outputSlots.push_back(slotOf[o]);
    slotCount = std::max<std::size_t>(nextSlot, 1);
  }

 private:
  std::uint32_t push(Instruction ins) {
    code_.push_back(ins);
    return static_cast<std::uint32_t>(code_.size() - 1);
  }

  std::vector<Instruction> code_;
  std::vector<double> constants_;
  std::unordered_map<const Node*, std::uint32_t> byNode_;
  std::unordered_map<Expr, std::uint32_t, ExprHash> byValue_;
};

}  // namespace

Tape Tape::compile(std::span<const Expr> outputs) {
  Compiler c;
  std::vector<std::uint32_t> values;
  values.reserve(outputs.size());
  for (const auto& e : outputs) values.push_back(c.emit(e));
  Tape t;
  c.finish(std::move(values), t.code_, t.constants_, t.outputSlots_, t.slotCount_);
  return t;
}

void Tape::evaluate(std::span<const double> xs, std::span<const double> ys, std::span<double> out,
                    std::span<std::uint8_t> status, Backend backend, const EvalOptions& options) const {
  const std::size_t n = xs.size();
  if (ys.size() != n || status.size() != n || out.size() != n * outputCount())
    throw std::invalid_argument("Tape::evaluate: buffer sizes do not match");
  const Backend kernel = resolve(backend);
  std::vector<double> slots(slotCount_ * kBlock);
  double bx[kBlock];
  double by[kBlock];
  std::uint8_t bs[kBlock];
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t count = std::min(kBlock, n - start);
    for (std::size_t l = 0; l < kBlock; ++l) {
      const std::size_t src = start + std::min(l, count - 1);
      bx[l] = xs[src];
      by[l] = ys[src];
      bs[l] = kStatusOk;
    }
    const detail::BlockArgs args{code_.data(), code_.size(), constants_.data(), bx, by, slots.data(), bs,
                                 options.denominatorGuard};
#if defined(ODEINV_HAVE_AVX2)
    if (kernel == Backend::Avx2) {
      detail::runBlockAvx2(args);
    } else {
      detail::runBlockScalar(args);
    }
#else
    (void)kernel;
    detail::runBlockScalar(args);
#endif
    for (std::size_t k = 0; k < outputSlots_.size(); ++k) {
      const double* src = slots.data() + outputSlots_[k] * kBlock;
      std::copy(src, src + count, out.begin() + static_cast<std::ptrdiff_t>(k * n + start));
    }
    std::copy(bs, bs + count, status.begin() + static_cast<std::ptrdiff_t>(start));
  }
}

std::vector<double> Tape::evaluateAt(Point2 p, const EvalOptions& options) const {
  std::vector<double> out(outputCount());
  std::uint8_t st = 0;
  evaluate(std::span<const double>(&p.x, 1), std::span<const double>(&p.y, 1), out, std::span<std::uint8_t>(&st, 1),
           Backend::Scalar, options);
  if (st & kStatusDivisionByZero) throw EvalError(EvalErrorKind::DivisionByZero, "negative power of a vanishing base");
  if (st & kStatusEvenRootOfNegative)
    throw EvalError(EvalErrorKind::EvenRootOfNegative, "even root of a negative base");
  if (st & kStatusOverflow) throw EvalError(EvalErrorKind::Overflow, "non-finite intermediate value");
  return out;
}

}  // namespace odeinv::expr
