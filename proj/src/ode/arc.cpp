#include "odeinv/ode/arc.hpp"

#include "odeinv/expr/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace odeinv::ode {

namespace {

struct State {
  double y;
  double p;
};

class RightHandSide {
 public:
  explicit RightHandSide(const CubicODE& E) : tape_(expr::Tape::compile(E.a)) {}

  State operator()(double x, State s) const {
    std::vector<double> c;
    try {
      c = tape_.evaluateAt({x, s.y});
    } catch (const expr::EvalError& err) {
      throw SingularEvaluation("coefficient not evaluable at x = " + std::to_string(x) + ": " + err.what());
    }
    const double ypp = ((c[3] * s.p + c[2]) * s.p + c[1]) * s.p + c[0];
    return {s.p, ypp};
  }

 private:
  expr::Tape tape_;
};

/// Weights of the first and second derivative at x[c] from the samples
/// x[0..n-1] (Fornberg's recursion; any spacing).
template <int n>
void derivativeWeights(const double (&x)[n], int c, double (&d1)[n], double (&d2)[n]) {
  double w[n][3] = {};
  const double z = x[c];
  double c1 = 1.0, c4 = x[0] - z;
  w[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) w[i][k] = c1 * (k * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
        w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) w[j][k] = (c4 * w[j][k] - k * w[j][k - 1]) / c3;
      w[j][0] = c4 * w[j][0] / c3;
    }
    c1 = c2;
  }
  for (int i = 0; i < n; ++i) {
    d1[i] = w[i][1];
    d2[i] = w[i][2];
  }
}

/// y' and y'' at sample i from five neighbouring samples, centred where
/// possible. Arcs of three or four samples use three.
std::pair<double, double> derivativesAt(const std::vector<ArcSample>& s, std::size_t i) {
  double yp = 0.0, ypp = 0.0;
  if (s.size() >= 5) {
    const std::size_t first = std::min(i >= 2 ? i - 2 : 0, s.size() - 5);
    double x[5], d1[5], d2[5];
    for (int k = 0; k < 5; ++k) x[k] = s[first + k].x;
    derivativeWeights(x, static_cast<int>(i - first), d1, d2);
    for (int k = 0; k < 5; ++k) {
      yp += d1[k] * s[first + k].y;
      ypp += d2[k] * s[first + k].y;
    }
  } else {
    double x[3] = {s[i - 1].x, s[i].x, s[i + 1].x}, d1[3], d2[3];
    derivativeWeights(x, 1, d1, d2);
    for (int k = 0; k < 3; ++k) {
      yp += d1[k] * s[i - 1 + k].y;
      ypp += d2[k] * s[i - 1 + k].y;
    }
  }
  return {yp, ypp};
}

void requireMonotone(const SolutionArc& arc) {
  const auto& s = arc.samples;
  if (s.size() < 3) throw DomainMismatch("arc needs at least three samples");
  const bool up = s[1].x > s[0].x;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (up ? !(s[i].x > s[i - 1].x) : !(s[i].x < s[i - 1].x))
      throw DomainMismatch("arc is not a graph over x near sample " + std::to_string(i));
  }
}

}  // namespace

SolutionArc integrateArc(const CubicODE& E, Point2 start, double slope, int steps, double h) {
  if (steps < 1 || h == 0.0 || !std::isfinite(h)) throw std::invalid_argument("integrateArc: need steps >= 1, h != 0");
  const RightHandSide f(E);
  SolutionArc arc;
  arc.samples.reserve(static_cast<std::size_t>(steps) + 1);
  double x = start.x;
  State s{start.y, slope};
  arc.samples.push_back({x, s.y, s.p});
  for (int n = 0; n < steps; ++n) {
    const State k1 = f(x, s);
    const State k2 = f(x + h / 2, {s.y + h / 2 * k1.y, s.p + h / 2 * k1.p});
    const State k3 = f(x + h / 2, {s.y + h / 2 * k2.y, s.p + h / 2 * k2.p});
    const State k4 = f(x + h, {s.y + h * k3.y, s.p + h * k3.p});
    s.y += h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
    s.p += h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    x = start.x + (n + 1) * h;
    if (!std::isfinite(s.y) || !std::isfinite(s.p))
      throw SingularEvaluation("solution left the finite range at x = " + std::to_string(x));
    arc.samples.push_back({x, s.y, s.p});
  }
  return arc;
}

SolutionArc mapArc(const SolutionArc& arc, const PointMap& f) {
  SolutionArc out;
  out.samples.reserve(arc.samples.size());
  for (const auto& s : arc.samples) {
    const Point2 q = f.apply({s.x, s.y});
    out.samples.push_back({q.x, q.y, 0.0});
  }
  requireMonotone(out);
  auto& m = out.samples;
  for (std::size_t i = 1; i + 1 < m.size(); ++i) m[i].slope = derivativesAt(m, i).first;
  // one-sided at the ends, from the chain rule on the original slope
  for (std::size_t i : {std::size_t{0}, m.size() - 1}) {
    const auto j = f.jacobian({arc.samples[i].x, arc.samples[i].y});
    const double p = arc.samples[i].slope;
    m[i].slope = (j[2] + j[3] * p) / (j[0] + j[1] * p);
  }
  return out;
}

double arcResidual(const CubicODE& E, const SolutionArc& arc) {
  requireMonotone(arc);
  const auto& s = arc.samples;
  double worst = 0.0;
  // centred stencils only: off-centre ones lose accuracy where spacing varies
  const std::size_t margin = s.size() >= 5 ? 2 : 1;
  for (std::size_t i = margin; i + margin < s.size(); ++i) {
    const auto [yp, ypp] = derivativesAt(s, i);
    double r = 0.0;
    try {
      r = E.rhs({s[i].x, s[i].y}, yp);
    } catch (const expr::EvalError& err) {
      throw SingularEvaluation(std::string("residual: ") + err.what());
    }
    worst = std::max(worst, std::fabs(ypp - r));
  }
  return worst;
}

}  // namespace odeinv::ode
