#include "odeinv/expr/expr.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace odeinv::expr {

// ---------------------------------------------------------------------------
// rational helpers

std::optional<Rational> powInteger(const Rational& r, long n) {
  if (n == 0) return Rational(1);
  if (r == 0) {
    if (n < 0) return std::nullopt;
    return Rational(0);
  }
  mpz_class num = r.get_num();
  mpz_class den = r.get_den();
  unsigned long k = static_cast<unsigned long>(n < 0 ? -n : n);
  mpz_class pn, pd;
  mpz_pow_ui(pn.get_mpz_t(), num.get_mpz_t(), k);
  mpz_pow_ui(pd.get_mpz_t(), den.get_mpz_t(), k);
  Rational out = n < 0 ? Rational(pd, pn) : Rational(pn, pd);
  out.canonicalize();
  return out;
}

namespace {

std::optional<mpz_class> exactRoot(const mpz_class& v, unsigned long q) {
  mpz_class out;
  if (mpz_root(out.get_mpz_t(), v.get_mpz_t(), q) == 0) return std::nullopt;
  return out;
}

}  // namespace

std::optional<Rational> powExact(const Rational& r, const Rational& exponent) {
  if (isInteger(exponent)) return powInteger(r, exponent.get_num().get_si());
  const long p = exponent.get_num().get_si();
  const unsigned long q = exponent.get_den().get_ui();
  if (r < 0 && q % 2 == 0) return std::nullopt;
  mpz_class absNum = abs(r.get_num());
  auto rn = exactRoot(absNum, q);
  auto rd = exactRoot(mpz_class(r.get_den()), q);
  if (!rn || !rd) return std::nullopt;
  Rational root(*rn, *rd);
  root.canonicalize();
  if (r < 0) root = -root;  // odd q
  return powInteger(root, p);
}

std::string rationalString(const Rational& r) { return r.get_str(); }

// ---------------------------------------------------------------------------
// node construction

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  std::uint64_t z = static_cast<std::uint64_t>(h) ^ (static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(z ^ (z >> 31));
}

std::size_t hashInteger(const mpz_class& z) {
  std::size_t h = static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 7);
  const std::size_t limbs = mpz_size(z.get_mpz_t());
  for (std::size_t i = 0; i < limbs; ++i) h = mix(h, static_cast<std::size_t>(mpz_getlimbn(z.get_mpz_t(), i)));
  return h;
}

std::size_t hashRational(const Rational& r) { return mix(hashInteger(r.get_num()), hashInteger(r.get_den())); }

int rank(Kind k) {
  switch (k) {
    case Kind::Const: return 0;
    case Kind::Var: return 1;
    case Kind::Power: return 2;
    case Kind::Product: return 3;
    case Kind::Sum: return 4;
  }
  return 5;
}

}  // namespace

class NodeFactory {
 public:
  /// Root of e's class of proven-equal nodes, compressing the path to it.
  static std::shared_ptr<const Node> root(const Expr& e) {
    std::shared_ptr<const Node> r = e.node_;
    while (r->same) r = r->same;
    for (std::shared_ptr<const Node> m = e.node_; m != r;) {
      std::shared_ptr<const Node> next = m->same;
      m->same = r;
      m = std::move(next);
    }
    return r;
  }

  static Expr make(Kind kind, Var var, Rational number, std::vector<Expr> operands) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->var = var;
    node->number = std::move(number);
    node->operands = std::move(operands);
    std::size_t h = mix(0x51ed27, static_cast<std::size_t>(kind));
    switch (kind) {
      case Kind::Const: h = mix(h, hashRational(node->number)); break;
      case Kind::Var: h = mix(h, static_cast<std::size_t>(var) + 1); break;
      case Kind::Power: h = mix(mix(h, node->operands[0].hash()), hashRational(node->number)); break;
      case Kind::Product:
      case Kind::Sum:
        for (const auto& op : node->operands) h = mix(h, op.hash());
        break;
    }
    node->hash = h;
    return Expr(std::shared_ptr<const Node>(std::move(node)));
  }
};

namespace {

const Expr& zeroExpr() {
  static const Expr zero = NodeFactory::make(Kind::Const, Var::X, Rational(0), {});
  return zero;
}

const Expr& oneExpr() {
  static const Expr one = NodeFactory::make(Kind::Const, Var::X, Rational(1), {});
  return one;
}

}  // namespace

Expr::Expr() : Expr(zeroExpr()) {}
Expr::Expr(int value) : Expr(Rational(value)) {}
Expr::Expr(const Rational& value) {
  if (value == 0) {
    *this = zeroExpr();
  } else if (value == 1) {
    *this = oneExpr();
  } else {
    Rational v = value;
    v.canonicalize();
    *this = NodeFactory::make(Kind::Const, Var::X, std::move(v), {});
  }
}

Expr Expr::constant(const Rational& value) { return Expr(value); }

Expr Expr::variable(Var v) { return NodeFactory::make(Kind::Var, v, Rational(0), {}); }

Expr Expr::rawSum(std::vector<Expr> terms) { return NodeFactory::make(Kind::Sum, Var::X, Rational(0), std::move(terms)); }

Expr Expr::rawProduct(std::vector<Expr> factors) {
  return NodeFactory::make(Kind::Product, Var::X, Rational(0), std::move(factors));
}

Expr Expr::rawPower(const Expr& base, const Rational& exponent) {
  Rational e = exponent;
  e.canonicalize();
  return NodeFactory::make(Kind::Power, Var::X, std::move(e), {base});
}

Kind Expr::kind() const { return node_->kind; }
bool Expr::isZero() const { return node_->kind == Kind::Const && node_->number == 0; }
bool Expr::isOne() const { return node_->kind == Kind::Const && node_->number == 1; }

const Rational& Expr::value() const {
  assert(kind() == Kind::Const);
  return node_->number;
}

Var Expr::variable() const {
  assert(kind() == Kind::Var);
  return node_->var;
}

const Expr& Expr::base() const {
  assert(kind() == Kind::Power);
  return node_->operands[0];
}

const Rational& Expr::exponent() const {
  assert(kind() == Kind::Power);
  return node_->number;
}

std::span<const Expr> Expr::operands() const { return node_->operands; }

std::size_t Expr::hash() const { return node_->hash; }

std::size_t Expr::dagSize() const {
  std::unordered_set<const Node*> seen;
  std::vector<const Expr*> stack{this};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (!seen.insert(e->id()).second) continue;
    for (const auto& op : e->operands()) stack.push_back(&op);
  }
  return seen.size();
}

// ---------------------------------------------------------------------------
// equality and ordering

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<const Node*, const Node*>& p) const {
    return mix(std::hash<const void*>()(p.first), std::hash<const void*>()(p.second));
  }
};

using EqualMemo = std::unordered_set<std::pair<const Node*, const Node*>, PairHash>;

bool equalImpl(const Expr& a, const Expr& b, EqualMemo& memo) {
  if (a.id() == b.id()) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
  const auto ra = NodeFactory::root(a);
  const auto rb = NodeFactory::root(b);
  if (ra == rb) return true;
  auto key = std::make_pair(ra.get(), rb.get());
  if (memo.count(key)) return true;
  switch (a.kind()) {
    case Kind::Const:
      if (a.value() != b.value()) return false;
      break;
    case Kind::Var:
      if (a.variable() != b.variable()) return false;
      break;
    case Kind::Power:
      if (a.exponent() != b.exponent()) return false;
      [[fallthrough]];
    case Kind::Product:
    case Kind::Sum: {
      auto ao = a.operands();
      auto bo = b.operands();
      if (ao.size() != bo.size()) return false;
      for (std::size_t i = 0; i < ao.size(); ++i)
        if (!equalImpl(ao[i], bo[i], memo)) return false;
      break;
    }
  }
  memo.insert(key);
  rb->same = ra;
  return true;
}

int cmpRational(const Rational& a, const Rational& b) {
  const int c = cmp(a, b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

int compareUnwrapped(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return 0;
  const int ra = rank(a.kind());
  const int rb = rank(b.kind());
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (a.kind()) {
    case Kind::Const: return cmpRational(a.value(), b.value());
    case Kind::Var:
      return a.variable() == b.variable() ? 0 : (a.variable() < b.variable() ? -1 : 1);
    case Kind::Power: return compare(a, b);
    case Kind::Product:
    case Kind::Sum: {
      if (a.hash() != b.hash()) return a.hash() < b.hash() ? -1 : 1;
      if (a == b) return 0;
      auto ao = a.operands();
      auto bo = b.operands();
      if (ao.size() != bo.size()) return ao.size() < bo.size() ? -1 : 1;
      for (std::size_t i = 0; i < ao.size(); ++i)
        if (int c = compare(ao[i], bo[i]); c != 0) return c;
      return 0;
    }
  }
  return 0;
}

}  // namespace

bool operator==(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return true;
  if (a.hash() != b.hash()) return false;
  EqualMemo memo;
  return equalImpl(a, b, memo);
}

int compare(const Expr& a, const Expr& b) {
  if (a.id() == b.id()) return 0;
  // Powers sort next to their base so that x < x^2 < y < y^2.
  const bool pa = a.kind() == Kind::Power;
  const bool pb = b.kind() == Kind::Power;
  if (!pa && !pb) return compareUnwrapped(a, b);
  const Expr& baseA = pa ? a.base() : a;
  const Expr& baseB = pb ? b.base() : b;
  if (int c = compare(baseA, baseB); c != 0) return c;
  const Rational one(1);
  const Rational& ea = pa ? a.exponent() : one;
  const Rational& eb = pb ? b.exponent() : one;
  if (int c = cmpRational(ea, eb); c != 0) return c;
  return pa == pb ? 0 : (pa ? 1 : -1);
}

// ---------------------------------------------------------------------------
// normalising constructors

namespace {

bool hasOddDenominator(const Rational& r) { return r.get_den() % 2 != 0; }

Expr attachCoefficient(const Rational& c, const Expr& rest) {
  if (c == 1) return rest;
  std::vector<Expr> factors{Expr(c)};
  if (rest.kind() == Kind::Product) {
    for (const auto& f : rest.operands()) factors.push_back(f);
  } else {
    factors.push_back(rest);
  }
  return Expr::rawProduct(std::move(factors));
}

Expr makePower(const Expr& base, const Rational& exponent);

Expr makeProduct(std::vector<Expr> input) {
  Rational coeff(1);
  std::vector<std::pair<Expr, Rational>> items;
  std::vector<Expr> pending = std::move(input);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Expr f = pending[i];
    switch (f.kind()) {
      case Kind::Const: coeff *= f.value(); break;
      case Kind::Product:
        for (const auto& g : f.operands()) pending.push_back(g);
        break;
      case Kind::Power: items.emplace_back(f.base(), f.exponent()); break;
      default: items.emplace_back(f, Rational(1)); break;
    }
  }
  if (coeff == 0) return Expr();
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });

  std::vector<Expr> factors;
  std::vector<Expr> reflatten;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i + 1;
    Rational exp = items[i].second;
    while (j < items.size() && compare(items[i].first, items[j].first) == 0) exp += items[j++].second;
    if (exp != 0) {
      Expr p = makePower(items[i].first, exp);
      if (p.kind() == Kind::Const) {
        coeff *= p.value();
      } else if (p.kind() == Kind::Product) {
        reflatten.push_back(p);
      } else {
        factors.push_back(p);
      }
    }
    i = j;
  }
  if (coeff == 0) return Expr();
  if (!reflatten.empty()) {
    for (auto& f : factors) reflatten.push_back(std::move(f));
    reflatten.emplace_back(coeff);
    return makeProduct(std::move(reflatten));
  }
  std::sort(factors.begin(), factors.end(), ExprLess());
  if (factors.empty()) return Expr(coeff);
  if (factors.size() == 1 && coeff == 1) return factors.front();
  if (coeff != 1) factors.insert(factors.begin(), Expr(coeff));
  return Expr::rawProduct(std::move(factors));
}

Expr makePower(const Expr& base, const Rational& exponent) {
  if (exponent == 0) return Expr(1);
  if (exponent == 1) return base;
  switch (base.kind()) {
    case Kind::Const: {
      if (base.value() == 1) return base;
      if (auto v = powExact(base.value(), exponent)) return Expr(*v);
      return Expr::rawPower(base, exponent);
    }
    case Kind::Power: {
      const Rational& inner = base.exponent();
      const bool mergeable = isInteger(exponent) || !hasOddDenominator(inner) ||
                             (hasOddDenominator(inner) && hasOddDenominator(exponent));
      if (mergeable) return makePower(base.base(), Rational(inner * exponent));
      return Expr::rawPower(base, exponent);
    }
    case Kind::Product: {
      if (!isInteger(exponent)) return Expr::rawPower(base, exponent);
      std::vector<Expr> factors;
      for (const auto& f : base.operands()) factors.push_back(makePower(f, exponent));
      return makeProduct(std::move(factors));
    }
    default: return Expr::rawPower(base, exponent);
  }
}

Expr makeSum(std::vector<Expr> input) {
  Rational constant(0);
  std::vector<std::pair<Expr, Rational>> items;
  // (term, scale); a rational multiple of a sum is spread over its terms
  std::vector<std::pair<Expr, Rational>> pending;
  pending.reserve(input.size());
  for (auto& t : input) pending.emplace_back(std::move(t), Rational(1));
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Expr t = pending[i].first;
    const Rational scale = pending[i].second;
    switch (t.kind()) {
      case Kind::Const: constant += scale * t.value(); break;
      case Kind::Sum:
        for (const auto& g : t.operands()) pending.emplace_back(g, scale);
        break;
      case Kind::Product: {
        auto ops = t.operands();
        if (!ops.empty() && ops[0].kind() == Kind::Const) {
          const Rational c = scale * ops[0].value();
          if (ops.size() == 2 && ops[1].kind() == Kind::Sum) {
            pending.emplace_back(ops[1], c);
          } else if (ops.size() == 2) {
            items.emplace_back(ops[1], c);
          } else {
            items.emplace_back(Expr::rawProduct(std::vector<Expr>(ops.begin() + 1, ops.end())), c);
          }
        } else {
          items.emplace_back(t, scale);
        }
        break;
      }
      default: items.emplace_back(t, scale); break;
    }
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
  std::vector<Expr> terms;
  if (constant != 0) terms.emplace_back(constant);
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i + 1;
    Rational c = items[i].second;
    while (j < items.size() && compare(items[i].first, items[j].first) == 0) c += items[j++].second;
    if (c != 0) terms.push_back(attachCoefficient(c, items[i].first));
    i = j;
  }
  if (terms.empty()) return Expr();
  if (terms.size() == 1) return terms.front();
  return Expr::rawSum(std::move(terms));
}

}  // namespace

Expr Expr::sum(std::vector<Expr> terms) { return makeSum(std::move(terms)); }
Expr Expr::product(std::vector<Expr> factors) { return makeProduct(std::move(factors)); }
Expr Expr::power(const Expr& base, const Rational& exponent) {
  Rational e = exponent;
  e.canonicalize();
  return makePower(base, e);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.isZero()) return b;
  if (b.isZero()) return a;
  return makeSum({a, b});
}

Expr operator-(const Expr& a) {
  if (a.isConstant()) return Expr(Rational(-a.value()));
  return makeProduct({Expr(-1), a});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.isZero()) return a;
  return makeSum({a, -b});
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.isZero() || b.isZero()) return Expr();
  if (a.isOne()) return b;
  if (b.isOne()) return a;
  return makeProduct({a, b});
}

Expr operator/(const Expr& a, const Expr& b) { return a * Expr::power(b, Rational(-1)); }

Expr pow(const Expr& base, const Rational& exponent) { return Expr::power(base, exponent); }

// ---------------------------------------------------------------------------

Expr simplify(const Expr& e) {
  std::unordered_map<const Node*, Expr> memo;
  auto rec = [&memo](auto&& self, const Expr& node) -> Expr {
    if (auto it = memo.find(node.id()); it != memo.end()) return it->second;
    Expr out;
    switch (node.kind()) {
      case Kind::Const:
      case Kind::Var: out = node; break;
      case Kind::Power: out = makePower(self(self, node.base()), node.exponent()); break;
      case Kind::Product:
      case Kind::Sum: {
        std::vector<Expr> ops;
        ops.reserve(node.operands().size());
        for (const auto& op : node.operands()) ops.push_back(self(self, op));
        out = node.kind() == Kind::Sum ? makeSum(std::move(ops)) : makeProduct(std::move(ops));
        break;
      }
    }
    memo.emplace(node.id(), out);
    return out;
  };
  return rec(rec, e);
}

namespace {

template <typename Pred>
bool allPowers(const Expr& e, Pred pred) {
  std::unordered_set<const Node*> seen;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur.id()).second) continue;
    if (cur.kind() == Kind::Power && !pred(cur)) return false;
    for (const auto& op : cur.operands()) stack.push_back(op);
  }
  return true;
}

}  // namespace

bool hasOnlyIntegerPowers(const Expr& e) {
  return allPowers(e, [](const Expr& p) { return isInteger(p.exponent()); });
}

bool isPolynomial(const Expr& e) {
  return allPowers(e, [](const Expr& p) {
    if (p.base().isConstant()) return isInteger(p.exponent()) && p.base().value() != 0;
    return isInteger(p.exponent()) && p.exponent() > 0;
  });
}

}  // namespace odeinv::expr
