#include "odeinv/ode/point_map.hpp"

#include "odeinv/expr/calculus.hpp"
#include "odeinv/expr/polynomial.hpp"
#include "odeinv/expr/tape.hpp"
#include "odeinv/ode/transform_rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace odeinv::ode {

using expr::EvalError;
using expr::Var;

namespace {

constexpr int kValidationGrid = 5;
constexpr double kRoundTripTol = 1e-9;

Point2 gridPoint(const Box& b, int n, int i, int j) {
  const double tx = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
  const double ty = n > 1 ? static_cast<double>(j) / (n - 1) : 0.5;
  return {b.x0 + (b.x1 - b.x0) * tx, b.y0 + (b.y1 - b.y0) * ty};
}

/// Upper bound on the total degree of a polynomial expression.
long degreeBound(const Expr& e, std::unordered_map<const expr::Node*, long>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  long d = 0;
  switch (e.kind()) {
    case expr::Kind::Const: d = 0; break;
    case expr::Kind::Var: d = 1; break;
    case expr::Kind::Sum:
      for (const auto& t : e.operands()) d = std::max(d, degreeBound(t, memo));
      break;
    case expr::Kind::Product:
      for (const auto& f : e.operands()) d += degreeBound(f, memo);
      break;
    case expr::Kind::Power: d = degreeBound(e.base(), memo) * e.exponent().get_num().get_si(); break;
  }
  memo.emplace(e.id(), d);
  return d;
}

/// Expands low-degree polynomials to monomial form, which is smaller and
/// cheaper to differentiate than nested products of sums. High-degree ones
/// (compositions of several nonlinear maps) are left nested: expanding them
/// costs far more than it saves.
Expr tidy(const Expr& e) {
  constexpr long kMaxExpandDegree = 16;
  if (!expr::isPolynomial(e)) return e;
  std::unordered_map<const expr::Node*, long> memo;
  if (degreeBound(e, memo) > kMaxExpandDegree) return e;
  return expr::Polynomial::fromExpr(e)->toExpr();
}

std::string describe(Point2 p) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

}  // namespace

PointMap::PointMap(std::array<Expr, 2> fwd, std::array<Expr, 2> inv, const Box& domain)
    : fwd_(std::move(fwd)), inv_(std::move(inv)), domain_(domain) {
  fwdJacobian_ = {expr::diff(fwd_[0], Var::X), expr::diff(fwd_[0], Var::Y), expr::diff(fwd_[1], Var::X),
                  expr::diff(fwd_[1], Var::Y)};
}

PointMap PointMap::make(Expr phi, Expr psi, Expr invPhi, Expr invPsi, const Box& domain) {
  if (!(domain.x0 < domain.x1) || !(domain.y0 < domain.y1))
    throw MapInvalid("map domain must satisfy x0 < x1 and y0 < y1");
  PointMap f({std::move(phi), std::move(psi)}, {std::move(invPhi), std::move(invPsi)}, domain);
  for (int i = 0; i < kValidationGrid; ++i) {
    for (int j = 0; j < kValidationGrid; ++j) {
      const Point2 p = gridPoint(domain, kValidationGrid, i, j);
      Point2 back;
      double det = 0.0;
      try {
        back = f.applyInverse(f.apply(p));
        det = f.jacobianDeterminant(p);
      } catch (const EvalError& err) {
        throw MapInvalid("map not evaluable at " + describe(p) + ": " + err.what());
      }
      const double err = std::hypot(back.x - p.x, back.y - p.y);
      if (!(err <= kRoundTripTol * std::max(1.0, std::hypot(p.x, p.y))))
        throw MapInvalid("inverse does not undo the map at " + describe(p));
      if (!std::isfinite(det) || std::fabs(det) < 1e-12)
        throw MapInvalid("Jacobian determinant vanishes at " + describe(p));
    }
  }
  return f;
}

PointMap PointMap::identity(const Box& domain) { return make(Expr::x(), Expr::y(), Expr::x(), Expr::y(), domain); }

Point2 PointMap::apply(Point2 p) const { return {expr::eval(fwd_[0], p), expr::eval(fwd_[1], p)}; }

Point2 PointMap::applyInverse(Point2 q) const { return {expr::eval(inv_[0], q), expr::eval(inv_[1], q)}; }

std::array<double, 4> PointMap::jacobian(Point2 p) const {
  return {expr::eval(fwdJacobian_[0], p), expr::eval(fwdJacobian_[1], p), expr::eval(fwdJacobian_[2], p),
          expr::eval(fwdJacobian_[3], p)};
}

double PointMap::jacobianDeterminant(Point2 p) const {
  const auto j = jacobian(p);
  return j[0] * j[3] - j[1] * j[2];
}

Box PointMap::imageBounds(int n) const {
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Point2 p = gridPoint(domain_, n, i, j);
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
  const auto tape = expr::Tape::compile(std::vector<Expr>{fwd_[0], fwd_[1]});
  const std::size_t m = xs.size();
  std::vector<double> out(2 * m);
  std::vector<std::uint8_t> status(m);
  tape.evaluate(xs, ys, out, status);
  Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < m; ++i) {
    if (status[i] != expr::kStatusOk) throw MapInvalid("map not evaluable on its domain");
    b.x0 = std::min(b.x0, out[i]);
    b.x1 = std::max(b.x1, out[i]);
    b.y0 = std::min(b.y0, out[m + i]);
    b.y1 = std::max(b.y1, out[m + i]);
  }
  return b;
}

std::vector<Expr> pushforwardNumerator(const CubicODE& E, const PointMap& f) {
  const Expr& gx = f.invPhi();
  const Expr& gy = f.invPsi();
  const InverseJet<Expr> jet{expr::diff(gx, Var::X), expr::diff(gx, Var::Y), expr::diff(gy, Var::X),
                             expr::diff(gy, Var::Y), expr::diff(gx, 2, 0),    expr::diff(gx, 1, 1),
                             expr::diff(gx, 0, 2),   expr::diff(gy, 2, 0),    expr::diff(gy, 1, 1),
                             expr::diff(gy, 0, 2)};
  std::array<Expr, 4> a;
  for (int i = 0; i < 4; ++i)
    if (!E.a[i].isZero()) a[i] = expr::substitute(E.a[i], gx, gy);
  return transformedNumerator(a, jet, [](const Expr& e) { return e.isZero(); });
}

CubicODE pushforwardODE(const CubicODE& E, const PointMap& f) {
  const std::vector<Expr> num = pushforwardNumerator(E, f);
  for (std::size_t k = 4; k < num.size(); ++k) {
    if (expr::isIdenticallyZero(num[k]) != expr::ZeroTest::Zero)
      throw ClosureViolation("transformed equation has a nonzero slope^" + std::to_string(k) + " term");
  }
  const Expr& gx = f.invPhi();
  const Expr& gy = f.invPsi();
  const Expr det = tidy(expr::diff(gx, Var::X) * expr::diff(gy, Var::Y) - expr::diff(gx, Var::Y) * expr::diff(gy, Var::X));
  if (det.isZero()) throw MapInvalid("inverse map has identically vanishing Jacobian");
  CubicODE out;
  for (std::size_t k = 0; k < 4 && k < num.size(); ++k) out.a[k] = tidy(num[k] / det);
  return out;
}

PointMap composePointMaps(const PointMap& f, const PointMap& g) {
  const Box& fd = f.domain();
  const double slack = 1e-12 * (1.0 + std::max({std::fabs(fd.x0), std::fabs(fd.x1), std::fabs(fd.y0), std::fabs(fd.y1)}));
  for (int i = 0; i < kValidationGrid; ++i) {
    for (int j = 0; j < kValidationGrid; ++j) {
      const Point2 p = gridPoint(g.domain(), kValidationGrid, i, j);
      Point2 q;
      try {
        q = g.apply(p);
      } catch (const EvalError& err) {
        throw DomainMismatch(std::string("inner map not evaluable: ") + err.what());
      }
      if (q.x < fd.x0 - slack || q.x > fd.x1 + slack || q.y < fd.y0 - slack || q.y > fd.y1 + slack)
        throw DomainMismatch("inner map sends " + describe(p) + " to " + describe(q) +
                             ", outside the outer map's domain");
    }
  }
  return PointMap::make(tidy(expr::substitute(f.phi(), g.phi(), g.psi())),
                        tidy(expr::substitute(f.psi(), g.phi(), g.psi())),
                        tidy(expr::substitute(g.invPhi(), f.invPhi(), f.invPsi())),
                        tidy(expr::substitute(g.invPsi(), f.invPhi(), f.invPsi())), g.domain());
}

}  // namespace odeinv::ode
