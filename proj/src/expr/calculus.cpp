#include "odeinv/expr/calculus.hpp"

#include <unordered_map>

namespace odeinv::expr {

Expr DerivativeCache::diff(const Expr& e, Var v) {
  auto& memo = memo_[v == Var::X ? 0 : 1];
  auto rec = [&memo, v](auto&& self, const Expr& node) -> Expr {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second.derivative;
    Expr out;
    switch (node.kind()) {
      case Kind::Const: break;
      case Kind::Var: out = Expr(node.variable() == v ? 1 : 0); break;
      case Kind::Sum: {
        std::vector<Expr> terms;
        for (const auto& t : node.operands()) {
          Expr d = self(self, t);
          if (!d.isZero()) terms.push_back(std::move(d));
        }
        out = Expr::sum(std::move(terms));
        break;
      }
      case Kind::Product: {
        auto factors = node.operands();
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < factors.size(); ++i) {
          Expr d = self(self, factors[i]);
          if (d.isZero()) continue;
          std::vector<Expr> prod;
          prod.reserve(factors.size());
          for (std::size_t j = 0; j < factors.size(); ++j) prod.push_back(j == i ? d : factors[j]);
          terms.push_back(Expr::product(std::move(prod)));
        }
        out = Expr::sum(std::move(terms));
        break;
      }
      case Kind::Power: {
        Expr db = self(self, node.base());
        if (!db.isZero()) {
          const Rational& r = node.exponent();
          out = Expr::product({Expr(r), Expr::power(node.base(), Rational(r - 1)), db});
        }
        break;
      }
    }
    memo.emplace(node.id(), Entry{node, out});
    return out;
  };
  return rec(rec, e);
}

Expr DerivativeCache::diff(const Expr& e, int nx, int ny) {
  Expr out = e;
  for (int i = 0; i < nx; ++i) out = diff(out, Var::X);
  for (int i = 0; i < ny; ++i) out = diff(out, Var::Y);
  return out;
}

Expr diff(const Expr& e, Var v) { return DerivativeCache().diff(e, v); }

Expr diff(const Expr& e, int nx, int ny) { return DerivativeCache().diff(e, nx, ny); }

Expr substitute(const Expr& e, const Expr& sx, const Expr& sy) {
  std::unordered_map<const Node*, Expr> memo;
  auto rec = [&](auto&& self, const Expr& node) -> Expr {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second;
    Expr out;
    switch (node.kind()) {
      case Kind::Const: out = node; break;
      case Kind::Var: out = node.variable() == Var::X ? sx : sy; break;
      case Kind::Power: out = Expr::power(self(self, node.base()), node.exponent()); break;
      case Kind::Sum:
      case Kind::Product: {
        std::vector<Expr> ops;
        for (const auto& op : node.operands()) ops.push_back(self(self, op));
        out = node.kind() == Kind::Sum ? Expr::sum(std::move(ops)) : Expr::product(std::move(ops));
        break;
      }
    }
    memo.emplace(node.id(), out);
    return out;
  };
  return rec(rec, e);
}

}  // namespace odeinv::expr
