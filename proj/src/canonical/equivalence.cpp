#include "odeinv/canonical/equivalence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace odeinv::canonical {

std::string_view statusName(EquivalenceStatus s) {
  switch (s) {
    case EquivalenceStatus::Equivalent: return "Equivalent";
    case EquivalenceStatus::NotEquivalent: return "NotEquivalent";
    case EquivalenceStatus::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

double deviation(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i)
    worst = std::max(worst, std::fabs(a[i] - b[i]) / (1.0 + std::max(std::fabs(a[i]), std::fabs(b[i]))));
  return worst;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

using Mat2 = std::array<double, 4>;  // row-major

/// Df = Dg2^-1 Dg1 from the chart derivatives {I1_x, I1_y, I2_x, I2_y}.
Mat2 mapDerivative(const std::array<double, 4>& dg1, const std::array<double, 4>& dg2) {
  const double det = dg2[0] * dg2[3] - dg2[1] * dg2[2];
  const Mat2 inv{dg2[3] / det, -dg2[1] / det, -dg2[2] / det, dg2[0] / det};
  return {inv[0] * dg1[0] + inv[1] * dg1[2], inv[0] * dg1[1] + inv[1] * dg1[3], inv[2] * dg1[0] + inv[3] * dg1[2],
          inv[2] * dg1[1] + inv[3] * dg1[3]};
}

struct Candidate {
  Point2 q;
  double dev;   // infinite where E2's coefficients are unavailable
  int orient;   // sign(det Dg1(p) det Dg2(q)), 0 where unknown
  bool continued = false;  // reached by continuation from a matched neighbour
};

bool inside(const Box& d, Point2 q) {
  const double slack = 1e-9 * std::max(d.x1 - d.x0, d.y1 - d.y0);
  return q.x >= d.x0 - slack && q.x <= d.x1 + slack && q.y >= d.y0 - slack && q.y <= d.y1 + slack;
}

std::vector<std::pair<int, int>> monomialsUpTo(int degree) {
  std::vector<std::pair<int, int>> m;
  for (int total = 0; total <= degree; ++total)
    for (int i = total; i >= 0; --i) m.emplace_back(i, total - i);
  return m;
}

}  // namespace

Point2 FittedMap::operator()(Point2 p) const {
  Point2 out{0.0, 0.0};
  for (std::size_t k = 0; k < monomials.size(); ++k) {
    const double m = std::pow(p.x, monomials[k].first) * std::pow(p.y, monomials[k].second);
    out.x += cx[k] * m;
    out.y += cy[k] * m;
  }
  return out;
}

std::optional<FittedMap> fitPolynomialMap(const std::vector<MapSample>& samples, int degree) {
  FittedMap fit;
  fit.degree = degree;
  fit.monomials = monomialsUpTo(degree);
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(fit.monomials.size());
  if (rows < cols) return std::nullopt;
  Eigen::MatrixXd V(rows, cols);
  Eigen::MatrixXd rhs(rows, 2);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const MapSample& s = samples[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& m = fit.monomials[static_cast<std::size_t>(c)];
      V(r, c) = std::pow(s.p.x, m.first) * std::pow(s.p.y, m.second);
    }
    rhs(r, 0) = s.q.x;
    rhs(r, 1) = s.q.y;
  }
  const Eigen::MatrixXd coef = V.colPivHouseholderQr().solve(rhs);
  fit.cx.assign(coef.col(0).data(), coef.col(0).data() + cols);
  fit.cy.assign(coef.col(1).data(), coef.col(1).data() + cols);
  fit.rmsResidual = std::sqrt((V * coef - rhs).squaredNorm() / static_cast<double>(rows));
  return fit;
}

EquivalenceVerdict decideEquivalence(const CubicODE& E1, const CubicODE& E2, const Box& dom1, const Box& dom2, int n,
                                     const EquivalenceOptions& options) {
  EquivalenceVerdict v;
  v.nodes = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  CanonicalForm C1, C2;
  try {
    C1 = canonicalForm(E1, dom1, n, options.jacTol);
  } catch (const invariants::DegenerateOrbit& err) {
    v.notes.push_back(std::string("first equation: ") + err.what());
  }
  try {
    C2 = canonicalForm(E2, dom2, n, options.jacTol);
  } catch (const invariants::DegenerateOrbit& err) {
    v.notes.push_back(std::string("second equation: ") + err.what());
  }
  if (!C1.model || !C2.model) return v;
  v.masked = C1.maskedCount();

  // Global stage: every preimage of g1(p) under g2 reached from lattice
  // seeds. Candidates carry their coefficient deviation and orientation
  // sign(det Dg1(p) det Dg2(q)), which a true match shares with det Df.
  const std::size_t count = C1.nodes.size();
  std::vector<std::uint8_t> inRange(count, 0);
  std::vector<std::size_t> sources;
  std::vector<Point2> targets;
  for (std::size_t k = 0; k < count; ++k) {
    if (!C1.mask[k]) continue;
    if (!insideHull(C2.hull, C1.gValues[k])) {
      ++v.outOfRange;
      continue;
    }
    inRange[k] = 1;
    sources.push_back(k);
    targets.push_back(C1.gValues[k]);
  }
  std::vector<std::vector<Candidate>> cands(count);
  auto offer = [&](const std::vector<std::size_t>& ks, const std::vector<Point2>& qs, bool continued) {
    const auto charts2 = C2.model->chartAt(qs);
    const auto coeffs2 = C2.model->coefficientsAt(qs);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      Candidate c{qs[i], std::numeric_limits<double>::infinity(), 0, continued};
      if (coeffs2[i]) c.dev = deviation(C1.coeffs[ks[i]], *coeffs2[i]);
      if (charts2[i]) c.orient = sign(C1.jacobian[ks[i]] * charts2[i]->jacobian);
      cands[ks[i]].push_back(c);
    }
  };
  {
    const auto preimages = chartPreimages(C2, targets, options.invert);
    std::vector<std::size_t> ks;
    std::vector<Point2> qs;
    for (std::size_t i = 0; i < sources.size(); ++i)
      for (const Point2 q : preimages[i]) {
        ks.push_back(sources[i]);
        qs.push_back(q);
      }
    offer(ks, qs, false);
  }
  int orientation = 0;  // sign of det Df, by vote of the matching candidates; 0 if none
  auto best = [&](std::size_t k) -> const Candidate* {
    const Candidate* b = nullptr;
    for (const Candidate& c : cands[k])
      if ((orientation == 0 || c.orient == orientation) && (!b || c.dev < b->dev)) b = &c;
    return b;
  };
  auto accepted = [&](std::size_t k) {
    const Candidate* b = best(k);
    return b && b->dev <= options.tol;
  };
  {
    long votes = 0;
    for (const std::size_t k : sources)
      if (const Candidate* b = best(k); b && b->dev <= options.tol) votes += b->orient;
    orientation = sign(static_cast<double>(votes));
  }

  // Continuation stage: f = g2^-1 o g1 is continuous, so a node next to an
  // accepted one is reached by following g1 along the lattice edge and
  // tracking the preimage, predicted with Df = Dg2(q)^-1 Dg1(p) and
  // corrected by Newton. Steps that flip the orientation (a jump across a
  // fold of the chart) or jump far are refused and the step is halved.
  // This recovers nodes where the chart is too curved for lattice seeds.
  // Tracks may leave dom2: such a node's counterpart lies outside the second
  // domain, and it still passes the continuation on to its neighbours.
  constexpr double kMinPathStep = 0x1p-12;
  constexpr double kMaxJump = 0.05;  // per path step, relative to the second domain
  const double span2 = std::max(dom2.x1 - dom2.x0, dom2.y1 - dom2.y0);
  const auto n1 = static_cast<std::size_t>(n);
  std::vector<std::uint8_t> tried(count, 0);  // bit d: continued from neighbour d
  std::vector<std::optional<Point2>> exitQ(count);  // continued counterpart outside dom2
  auto reached = [&](std::ptrdiff_t k) { return k >= 0 && (accepted(std::size_t(k)) || exitQ[std::size_t(k)]); };
  InvertOptions unconfined = options.invert;
  unconfined.stayInDomain = false;
  while (orientation != 0) {
    std::vector<std::size_t> ks, from;
    for (std::size_t k = 0; k < count; ++k) {
      if (!inRange[k] || reached(std::ptrdiff_t(k))) continue;
      const std::size_t i = k % n1, j = k / n1;
      const std::array<std::ptrdiff_t, 4> nb{i > 0 ? std::ptrdiff_t(k - 1) : -1, i + 1 < n1 ? std::ptrdiff_t(k + 1) : -1,
                                             j > 0 ? std::ptrdiff_t(k - n1) : -1,
                                             j + 1 < n1 ? std::ptrdiff_t(k + n1) : -1};
      for (std::size_t d = 0; d < 4; ++d) {
        if (nb[d] < 0 || (tried[k] >> d & 1) || !reached(nb[d])) continue;
        tried[k] |= static_cast<std::uint8_t>(1u << d);
        ks.push_back(k);
        from.push_back(static_cast<std::size_t>(nb[d]));
        break;
      }
    }
    if (ks.empty()) break;

    struct Track {
      double s = 0.0;
      double ds = 0.125;
      Point2 q;
      Mat2 df;
    };
    std::vector<Track> track(ks.size());
    {
      std::vector<Point2> q0;
      for (std::size_t r = 0; r < ks.size(); ++r) q0.push_back(accepted(from[r]) ? best(from[r])->q : *exitQ[from[r]]);
      const auto charts2 = C2.model->chartAt(q0);
      for (std::size_t r = 0; r < ks.size(); ++r) {
        track[r].q = q0[r];
        track[r].df = mapDerivative(C1.dg[from[r]], charts2[r]->dg);
      }
    }
    std::vector<std::size_t> alive(ks.size());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::size_t> done;
    auto pathAt = [&](std::size_t r, double s) {
      const Point2 a = C1.nodes[from[r]], b = C1.nodes[ks[r]];
      return Point2{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
    };
    while (!alive.empty()) {
      std::vector<Point2> path, seeds;
      std::vector<double> next(alive.size());
      for (std::size_t t = 0; t < alive.size(); ++t) {
        const Track& tr = track[alive[t]];
        next[t] = std::min(1.0, tr.s + tr.ds);
        const Point2 p0 = pathAt(alive[t], tr.s), p1 = pathAt(alive[t], next[t]);
        path.push_back(p1);
        const double dx = p1.x - p0.x, dy = p1.y - p0.y;
        seeds.push_back({tr.q.x + tr.df[0] * dx + tr.df[1] * dy, tr.q.y + tr.df[2] * dx + tr.df[3] * dy});
      }
      const auto charts1 = C1.model->chartAt(path);
      std::vector<Point2> stepTargets(alive.size(), Point2{0.0, 0.0});
      for (std::size_t t = 0; t < alive.size(); ++t)
        if (next[t] == 1.0)
          stepTargets[t] = C1.gValues[ks[alive[t]]];
        else if (charts1[t])
          stepTargets[t] = charts1[t]->g;
      const auto q = refinePreimages(C2, stepTargets, seeds, unconfined);
      std::vector<Point2> qs;
      for (std::size_t t = 0; t < alive.size(); ++t) qs.push_back(q[t] ? *q[t] : track[alive[t]].q);
      const auto charts2 = C2.model->chartAt(qs);
      std::vector<std::size_t> still;
      for (std::size_t t = 0; t < alive.size(); ++t) {
        Track& tr = track[alive[t]];
        const bool ok = q[t] && charts1[t] && charts2[t] &&
                        sign(charts1[t]->jacobian * charts2[t]->jacobian) == orientation &&
                        std::hypot(q[t]->x - tr.q.x, q[t]->y - tr.q.y) <= kMaxJump * span2;
        if (ok) {
          tr.s = next[t];
          tr.q = *q[t];
          tr.df = mapDerivative(charts1[t]->dg, charts2[t]->dg);
          tr.ds = std::min(0.25, 2 * tr.ds);
          if (tr.s == 1.0) {
            done.push_back(alive[t]);
            continue;
          }
        } else if ((tr.ds /= 2) < kMinPathStep) {
          continue;
        }
        still.push_back(alive[t]);
      }
      alive = std::move(still);
    }
    std::vector<std::size_t> doneK, exitK;
    std::vector<Point2> doneQ, exitQs;
    for (const std::size_t r : done) {
      auto [kk, qq] = inside(dom2, track[r].q) ? std::tie(doneK, doneQ) : std::tie(exitK, exitQs);
      kk.push_back(ks[r]);
      qq.push_back(track[r].q);
    }
    offer(doneK, doneQ, true);
    const auto exitCoeffs = C2.model->coefficientsAt(exitQs);
    for (std::size_t i = 0; i < exitK.size(); ++i)
      if (exitCoeffs[i] && deviation(C1.coeffs[exitK[i]], *exitCoeffs[i]) <= options.tol) exitQ[exitK[i]] = exitQs[i];
  }

  const auto acceptedCount =
      static_cast<double>(std::count_if(sources.begin(), sources.end(), [&](std::size_t k) { return accepted(k); }));
  const bool anchored = acceptedCount >= options.coverageThreshold * static_cast<double>(v.nodes);
  std::size_t unusable = 0, misoriented = 0, exited = 0;
  for (const std::size_t k : sources) {
    if (exitQ[k]) {
      ++exited;
      continue;
    }
    if (cands[k].empty()) {
      ++v.noConvergence;
      continue;
    }
    const Candidate* b = best(k);
    if (!b) {
      ++misoriented;
      continue;
    }
    if (!std::isfinite(b->dev)) {
      ++unusable;
      continue;
    }
    if (anchored && b->dev > options.tol &&
        std::none_of(cands[k].begin(), cands[k].end(), [](const Candidate& c) { return c.continued; })) {
      ++v.unverified;
      continue;
    }
    ++v.matched;
    v.maxDeviation = std::max(v.maxDeviation, b->dev);
    v.recoveredMap.push_back({C1.nodes[k], b->q});
  }
  v.coverage = static_cast<double>(v.matched) / static_cast<double>(v.nodes);
  if (v.outOfRange) v.notes.push_back(std::to_string(v.outOfRange) + " targets outside the second chart's range");
  v.outOfRange += exited;
  if (exited) v.notes.push_back(std::to_string(exited) + " nodes continue to counterparts outside the second domain");
  if (v.unverified)
    v.notes.push_back(std::to_string(v.unverified) +
                      " nodes mismatch only on chart sheets that continuation from the matched region does not reach");
  if (v.noConvergence) v.notes.push_back(std::to_string(v.noConvergence) + " chart inversions did not converge");
  if (misoriented)
    v.notes.push_back(std::to_string(misoriented) + " nodes had only preimages of the opposite orientation");
  if (unusable) v.notes.push_back(std::to_string(unusable) + " preimages not in general position");

  if (v.coverage < options.coverageThreshold) {
    v.status = EquivalenceStatus::Inconclusive;
    v.notes.push_back("coverage below the threshold; orientation-reversing or disjoint charts also end here");
  } else {
    v.status = v.maxDeviation <= options.tol ? EquivalenceStatus::Equivalent : EquivalenceStatus::NotEquivalent;
  }
  if (options.fitDegree >= 0) v.fittedMap = fitPolynomialMap(v.recoveredMap, options.fitDegree);
  return v;
}

}  // namespace odeinv::canonical
