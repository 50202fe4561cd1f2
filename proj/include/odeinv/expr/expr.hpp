#pragma once

#include "odeinv/expr/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace odeinv::expr {

enum class Kind : std::uint8_t { Const, Var, Power, Product, Sum };

enum class Var : std::uint8_t { X, Y };

struct Node;

/// Immutable symbolic expression in the two variables x, y.
///
/// Nodes are shared; an Expr is a cheap handle. Division is Power(., -1).
/// Expressions produced by the arithmetic operators and by the factory
/// functions below are always in normal form (see simplify()). The raw*
/// factories build a node verbatim and exist so that simplify() has
/// something to work on.
class Expr {
 public:
  Expr();  // the constant 0
  Expr(int value);  // NOLINT(google-explicit-constructor)
  explicit Expr(const Rational& value);

  static Expr constant(const Rational& value);
  static Expr variable(Var v);
  static Expr x() { return variable(Var::X); }
  static Expr y() { return variable(Var::Y); }

  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr power(const Expr& base, const Rational& exponent);

  static Expr rawSum(std::vector<Expr> terms);
  static Expr rawProduct(std::vector<Expr> factors);
  static Expr rawPower(const Expr& base, const Rational& exponent);

  Kind kind() const;
  bool isConstant() const { return kind() == Kind::Const; }
  bool isZero() const;
  bool isOne() const;

  /// Const only.
  const Rational& value() const;
  /// Var only.
  Var variable() const;
  /// Power only.
  const Expr& base() const;
  const Rational& exponent() const;
  /// Sum terms or Product factors; {base} for Power; empty otherwise.
  std::span<const Expr> operands() const;

  /// Structural hash; equal expressions hash equally.
  std::size_t hash() const;
  /// Node identity, for memo tables keyed on sharing.
  const Node* id() const { return node_.get(); }

  /// Number of distinct nodes reachable from this one.
  std::size_t dagSize() const;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  friend struct Node;
  friend class NodeFactory;

  std::shared_ptr<const Node> node_;
};

struct Node {
  Kind kind;
  Var var = Var::X;
  Rational number;  // constant value or power exponent
  std::vector<Expr> operands;
  std::size_t hash = 0;
  // Union-find link to a node already proven structurally equal; set by
  // operator== so repeated comparisons of equal DAGs are O(1). Not
  // synchronised: expressions must not be compared from several threads.
  mutable std::shared_ptr<const Node> same;
};

/// Structural equality. Memoised on node pairs, so it is linear in the DAG
/// size even for heavily shared expressions.
bool operator==(const Expr& a, const Expr& b);

/// Total order used to canonicalise operand lists: constants, then
/// variables, then powers, products and sums.
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, const Rational& exponent);

/// Rebuilds `e` bottom-up in normal form: nested sums and products are
/// flattened, constants folded, like terms collected, equal-base powers
/// merged and zero products detected. Idempotent.
Expr simplify(const Expr& e);

/// True if no Power node has a non-integer exponent.
bool hasOnlyIntegerPowers(const Expr& e);

/// True if the expression is a polynomial in x, y (no negative or
/// fractional powers of non-constant bases).
bool isPolynomial(const Expr& e);

}  // namespace odeinv::expr
