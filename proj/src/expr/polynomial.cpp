#include "odeinv/expr/polynomial.hpp"

#include <unordered_map>

namespace odeinv::expr {

Polynomial::Polynomial(const Rational& c) {
  if (c != 0) terms_[{0, 0}] = c;
}

Polynomial Polynomial::monomial(const Rational& c, int dx, int dy) {
  Polynomial p;
  if (c != 0) p.terms_[{dx, dy}] = c;
  return p;
}

void Polynomial::add(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add(m, -c);
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) out.add({ma.first + mb.first, ma.second + mb.second}, ca * cb);
  return out;
}

Polynomial Polynomial::pow(unsigned n) const {
  Polynomial result(1);
  Polynomial base = *this;
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

int Polynomial::totalDegree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, m.first + m.second);
  return d;
}

Rational Polynomial::coefficient(int dx, int dy) const {
  auto it = terms_.find({dx, dy});
  return it == terms_.end() ? Rational(0) : it->second;
}

std::optional<Polynomial> Polynomial::fromExpr(const Expr& e) {
  if (!isPolynomial(e)) return std::nullopt;
  std::unordered_map<const Node*, Polynomial> memo;
  auto rec = [&memo](auto&& self, const Expr& node) -> Polynomial {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second;
    Polynomial out;
    switch (node.kind()) {
      case Kind::Const: out = Polynomial(node.value()); break;
      case Kind::Var: out = node.variable() == Var::X ? monomial(1, 1, 0) : monomial(1, 0, 1); break;
      case Kind::Sum:
        for (const auto& t : node.operands()) out += self(self, t);
        break;
      case Kind::Product:
        out = Polynomial(1);
        for (const auto& f : node.operands()) out = out * self(self, f);
        break;
      case Kind::Power: {
        const long n = node.exponent().get_num().get_si();
        if (node.base().isConstant()) {
          out = Polynomial(*powInteger(node.base().value(), n));
        } else {
          out = self(self, node.base()).pow(static_cast<unsigned>(n));
        }
        break;
      }
    }
    memo.emplace(node.id(), out);
    return out;
  };
  return rec(rec, e);
}

Expr Polynomial::toExpr() const {
  std::vector<Expr> terms;
  terms.reserve(terms_.size());
  for (const auto& [m, c] : terms_) {
    std::vector<Expr> factors{Expr(c)};
    if (m.first > 0) factors.push_back(Expr::power(Expr::x(), m.first));
    if (m.second > 0) factors.push_back(Expr::power(Expr::y(), m.second));
    terms.push_back(Expr::product(std::move(factors)));
  }
  return Expr::sum(std::move(terms));
}

}  // namespace odeinv::expr
