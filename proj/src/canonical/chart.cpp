#include "odeinv/canonical/canonical.hpp"

#include "odeinv/expr/calculus.hpp"
#include "odeinv/ode/transform_rule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace odeinv::canonical {

using expr::Var;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// chart tape outputs
enum : std::size_t { kI1, kI2, kI1x, kI1y, kI2x, kI2y, kL1, kL2, kL3, kChartOutputs };
// form tape outputs
enum : std::size_t { kI1xx, kI1xy, kI1yy, kI2xx, kI2xy, kI2yy, kA0, kA1, kA2, kA3, kFormOutputs };

struct ChartExprs {
  std::vector<Expr> chart;  // chart tape outputs
  std::vector<Expr> form;   // form tape outputs
};

ChartExprs chartExpressions(const CubicODE& E, const InvariantBundle& B, expr::DerivativeCache& d) {
  auto diff = [&](const Expr& e, Var v) { return d.diff(e, v); };
  const Expr i1x = diff(B.I1, Var::X), i1y = diff(B.I1, Var::Y);
  const Expr i2x = diff(B.I2, Var::X), i2y = diff(B.I2, Var::Y);
  ChartExprs out;
  out.chart = {B.I1, B.I2, i1x, i1y, i2x, i2y, B.L1, B.L2, B.L3};
  out.form = {diff(i1x, Var::X), diff(i1x, Var::Y), diff(i1y, Var::Y), diff(i2x, Var::X), diff(i2x, Var::Y),
              diff(i2y, Var::Y), E.a[0],           E.a[1],           E.a[2],           E.a[3]};
  return out;
}

/// Runs a tape over points; row r of the result holds the outputs at
/// points[r], or is empty where evaluation failed.
std::vector<std::vector<double>> evaluateRows(const expr::Tape& tape, const std::vector<Point2>& points) {
  const std::size_t n = points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
  }
  std::vector<double> out(n * tape.outputCount());
  std::vector<std::uint8_t> status(n);
  tape.evaluate(xs, ys, out, status);
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] != expr::kStatusOk) continue;
    rows[i].resize(tape.outputCount());
    for (std::size_t k = 0; k < tape.outputCount(); ++k) rows[i][k] = out[k * n + i];
  }
  return rows;
}

std::optional<ChartModel::ChartSample> chartFromRow(const std::vector<double>& r, double jacTol) {
  if (r.empty()) return std::nullopt;
  ChartModel::ChartSample s;
  s.g = {r[kI1], r[kI2]};
  s.dg = {r[kI1x], r[kI1y], r[kI2x], r[kI2y]};
  s.jacobian = r[kI1x] * r[kI2y] - r[kI1y] * r[kI2x];
  const double tol = invariants::kPointwiseZeroTol;
  const bool order2 = std::fabs(r[kL1]) > tol || std::fabs(r[kL2]) > tol;
  s.generalPosition = order2 && std::fabs(r[kL3]) > tol && std::fabs(s.jacobian) > jacTol;
  return s;
}

/// Canonical coefficients from the forward 2-jet of g at p: invert the jet
/// and apply the transformation rule with a_i(g^-1(g(p))) = a_i(p).
std::array<double, 4> coefficientsFromJet(const ChartModel::ChartSample& c, const std::vector<double>& f) {
  const double a11 = c.dg[0], a12 = c.dg[1], a21 = c.dg[2], a22 = c.dg[3];
  const double det = c.jacobian;
  // Dh = (Dg)^-1; column k is the derivative of h along target axis k
  const double h11 = a22 / det, h12 = -a12 / det, h21 = -a21 / det, h22 = a11 / det;
  const double cx[2] = {h11, h21};
  const double cy[2] = {h12, h22};
  auto second = [&](const double* u, const double* v) {
    // w = D^2 g(u, v), then D^2 h = -Dh w
    const double w1 = f[kI1xx] * u[0] * v[0] + f[kI1xy] * (u[0] * v[1] + u[1] * v[0]) + f[kI1yy] * u[1] * v[1];
    const double w2 = f[kI2xx] * u[0] * v[0] + f[kI2xy] * (u[0] * v[1] + u[1] * v[0]) + f[kI2yy] * u[1] * v[1];
    return std::array<double, 2>{-(h11 * w1 + h12 * w2), -(h21 * w1 + h22 * w2)};
  };
  const auto hxx = second(cx, cx);
  const auto hxy = second(cx, cy);
  const auto hyy = second(cy, cy);
  const ode::InverseJet<double> jet{h11, h12, h21, h22, hxx[0], hxy[0], hyy[0], hxx[1], hxy[1], hyy[1]};
  return ode::transformedCoefficients({f[kA0], f[kA1], f[kA2], f[kA3]}, jet);
}

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<Point2> convexHull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return pts;
  std::vector<Point2> h(2 * pts.size());
  std::size_t k = 0;
  for (const Point2 p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

}  // namespace

ChartModel::ChartModel(const CubicODE& E, double jacTol) : ode_(E), jacTol_(jacTol) {
  expr::DerivativeCache cache;
  bundle_ = invariants::computeInvariants(E, cache);
  const ChartExprs exprs = chartExpressions(ode_, bundle_, cache);
  chartTape_ = expr::Tape::compile(exprs.chart);
  formTape_ = expr::Tape::compile(exprs.form);
}

std::vector<std::optional<ChartModel::ChartSample>> ChartModel::chartAt(const std::vector<Point2>& points) const {
  const auto rows = evaluateRows(chartTape_, points);
  std::vector<std::optional<ChartSample>> out;
  out.reserve(points.size());
  for (const auto& r : rows) out.push_back(chartFromRow(r, jacTol_));
  return out;
}

std::optional<ChartModel::ChartSample> ChartModel::chartAt(Point2 p) const { return chartAt(std::vector<Point2>{p})[0]; }

std::vector<std::optional<std::array<double, 4>>> ChartModel::coefficientsAt(const std::vector<Point2>& points) const {
  const auto charts = chartAt(points);
  const auto rows = evaluateRows(formTape_, points);
  std::vector<std::optional<std::array<double, 4>>> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!charts[i] || !charts[i]->generalPosition || rows[i].empty()) continue;
    const auto c = coefficientsFromJet(*charts[i], rows[i]);
    if (std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) out[i] = c;
  }
  return out;
}

std::optional<std::array<double, 4>> ChartModel::coefficientsAt(Point2 p) const {
  return coefficientsAt(std::vector<Point2>{p})[0];
}

std::size_t CanonicalForm::maskedCount() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

namespace {

CanonicalForm buildChart(std::shared_ptr<const ChartModel> model, const Box& domain, int n) {
  if (n < 2) throw std::invalid_argument("canonical grid needs n >= 2");
  CanonicalForm C;
  C.domain = domain;
  C.n = n;
  C.model = std::move(model);
  const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  C.nodes.reserve(count);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      C.nodes.push_back({domain.x0 + (domain.x1 - domain.x0) * i / (n - 1),
                         domain.y0 + (domain.y1 - domain.y0) * j / (n - 1)});
  const auto charts = C.model->chartAt(C.nodes);
  C.gValues.assign(count, {kNaN, kNaN});
  C.jacobian.assign(count, kNaN);
  C.dg.assign(count, {kNaN, kNaN, kNaN, kNaN});
  C.mask.assign(count, 0);
  C.coeffs.assign(count, {kNaN, kNaN, kNaN, kNaN});
  std::vector<Point2> masked;
  for (std::size_t k = 0; k < count; ++k) {
    if (!charts[k]) continue;
    C.gValues[k] = charts[k]->g;
    C.jacobian[k] = charts[k]->jacobian;
    C.dg[k] = charts[k]->dg;
    C.mask[k] = charts[k]->generalPosition ? 1 : 0;
    if (C.mask[k]) masked.push_back(C.gValues[k]);
  }
  if (masked.empty()) throw NowhereGeneralPosition("no grid node is in general position with a usable chart Jacobian");
  C.hull = convexHull(std::move(masked));
  return C;
}

std::shared_ptr<const ChartModel> makeModel(const CubicODE& E, double jacTol) {
  try {
    return std::make_shared<const ChartModel>(E, jacTol);
  } catch (const NowhereGeneralPosition&) {
    throw;
  } catch (const invariants::DegenerateOrbit& err) {
    throw NowhereGeneralPosition(err.what());
  }
}

}  // namespace

CanonicalForm canonicalChart(const CubicODE& E, const Box& domain, int n, double jacTol) {
  return buildChart(makeModel(E, jacTol), domain, n);
}

CanonicalForm canonicalForm(const CubicODE& E, const Box& domain, int n, double jacTol) {
  CanonicalForm C = canonicalChart(E, domain, n, jacTol);
  const auto coeffs = C.model->coefficientsAt(C.nodes);
  for (std::size_t k = 0; k < C.nodes.size(); ++k) {
    if (!C.mask[k]) continue;
    if (coeffs[k]) {
      C.coeffs[k] = *coeffs[k];
    } else {
      C.mask[k] = 0;  // second derivatives not evaluable
    }
  }
  C.hasCoefficients = true;
  return C;
}

bool insideHull(const std::vector<Point2>& hull, Point2 q) {
  if (hull.size() < 3) return false;
  double scale = 0.0;
  for (const Point2 p : hull) scale = std::max({scale, std::fabs(p.x), std::fabs(p.y)});
  const double slack = 1e-12 * (1.0 + scale) * (1.0 + scale);
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (cross(hull[i], hull[(i + 1) % hull.size()], q) < -slack) return false;
  return true;
}

namespace {

struct PreimageSearch {
  std::vector<Point2> found;
  bool leftDomain = false;  // some seed converged outside the domain
};

struct Triangle {
  std::array<std::size_t, 3> k;
  double lx, hx, ly, hy;  // bounding box in chart space
};

/// Lattice triangles on which g is resolved: the affine interpolant of
/// the node values has a derivative within `kResolution` (relative) of the
/// sampled chart derivative at each vertex. Triangles across folds or near
/// L3 = 0 fail this and are left to the nearest-node seeds.
std::vector<Triangle> chartTriangles(const CanonicalForm& C) {
  constexpr double kResolution = 0.5;
  std::vector<Triangle> tris;
  const auto n = static_cast<std::size_t>(C.n);
  const auto& dg = C.dg;
  for (std::size_t j = 0; j + 1 < n; ++j)
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t k00 = j * n + i, k10 = k00 + 1, k01 = k00 + n, k11 = k01 + 1;
      if (!C.mask[k00] || !C.mask[k10] || !C.mask[k01] || !C.mask[k11]) continue;
      for (const auto& k : {std::array<std::size_t, 3>{k00, k10, k11}, std::array<std::size_t, 3>{k00, k11, k01}}) {
        // affine derivative from the edges k0->k1 and k0->k2
        const Point2 a = C.nodes[k[0]], b = C.nodes[k[1]], c = C.nodes[k[2]];
        const Point2 ga = C.gValues[k[0]], gb = C.gValues[k[1]], gc = C.gValues[k[2]];
        const double e1x = b.x - a.x, e1y = b.y - a.y, e2x = c.x - a.x, e2y = c.y - a.y;
        const double det = e1x * e2y - e1y * e2x;
        const double d1x = gb.x - ga.x, d1y = gb.y - ga.y, d2x = gc.x - ga.x, d2y = gc.y - ga.y;
        const std::array<double, 4> lin{(d1x * e2y - d2x * e1y) / det, (d2x * e1x - d1x * e2x) / det,
                                        (d1y * e2y - d2y * e1y) / det, (d2y * e1x - d1y * e2x) / det};
        bool resolved = true;
        for (const std::size_t v : k) {
          double diff = 0.0, size = 0.0;
          for (int m = 0; m < 4; ++m) {
            diff = std::max(diff, std::fabs(lin[m] - dg[v][m]));
            size = std::max(size, std::fabs(dg[v][m]));
          }
          if (!(diff <= kResolution * size)) resolved = false;
        }
        if (!resolved) continue;
        Triangle t{k, 0.0, 0.0, 0.0, 0.0};
        t.lx = std::min({ga.x, gb.x, gc.x});
        t.hx = std::max({ga.x, gb.x, gc.x});
        t.ly = std::min({ga.y, gb.y, gc.y});
        t.hy = std::max({ga.y, gb.y, gc.y});
        tris.push_back(t);
      }
    }
  return tris;
}

/// Starting points for Newton: the linear preimage in every lattice
/// triangle whose chart image contains the target, then the nodes whose
/// chart values are nearest.
std::vector<Point2> seedsFor(const CanonicalForm& C, const std::vector<Triangle>& tris,
                             const std::vector<std::size_t>& maskedNodes, Point2 t, int nearest) {
  constexpr std::size_t kMaxCellSeeds = 16;
  std::vector<Point2> seeds;
  for (const Triangle& tri : tris) {
    if (t.x < tri.lx || t.x > tri.hx || t.y < tri.ly || t.y > tri.hy) continue;
    const Point2 a = C.gValues[tri.k[0]], b = C.gValues[tri.k[1]], c = C.gValues[tri.k[2]];
    const double area = cross(a, b, c);
    if (area == 0.0) continue;
    const double wa = cross(t, b, c) / area, wb = cross(a, t, c) / area, wc = 1.0 - wa - wb;
    constexpr double eps = -1e-9;
    if (wa < eps || wb < eps || wc < eps) continue;
    const Point2 na = C.nodes[tri.k[0]], nb = C.nodes[tri.k[1]], nc = C.nodes[tri.k[2]];
    seeds.push_back({wa * na.x + wb * nb.x + wc * nc.x, wa * na.y + wb * nb.y + wc * nc.y});
    if (seeds.size() == kMaxCellSeeds) break;
  }
  std::vector<std::size_t> order = maskedNodes;
  auto dist2 = [&](std::size_t k) {
    const double dx = C.gValues[k].x - t.x, dy = C.gValues[k].y - t.y;
    return dx * dx + dy * dy;
  };
  const std::size_t count = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(0, nearest)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist2(a) < dist2(b) || (dist2(a) == dist2(b) && a < b); });
  for (std::size_t s = 0; s < count; ++s) seeds.push_back(C.nodes[order[s]]);
  return seeds;
}

struct NewtonResult {
  std::optional<Point2> p;  // converged inside the domain
  bool leftDomain = false;  // converged outside the domain
};

/// Damped Newton on g(p) = targets[job] from seeds[job] for every job at
/// once; each round evaluates the chart for all live iterates in one batch.
std::vector<NewtonResult> newtonBatch(const CanonicalForm& C, const std::vector<Point2>& targets,
                                      const std::vector<Point2>& seeds, const InvertOptions& options) {
  constexpr int kPolishSteps = 2;
  struct Job {
    Point2 p;
    Point2 step{0.0, 0.0};
    double tol = 0.0;
    double res = 0.0;
    double lambda = 1.0;
    int iterations = 0;
    int polish = 0;
    enum { Live, Converged, Failed } state = Live;
  };
  std::vector<Job> jobs(seeds.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    jobs[i].p = seeds[i];
    jobs[i].tol = options.residualTol * std::max(1.0, std::hypot(targets[i].x, targets[i].y));
  }
  auto usable = [](const std::optional<ChartModel::ChartSample>& s) {
    return s && std::isfinite(s->g.x) && std::isfinite(s->g.y);
  };
  // takes a chart sample at the job's current point: converge, fail, or plan the next step
  auto accept = [&](std::size_t i, const ChartModel::ChartSample& s) {
    Job& job = jobs[i];
    const double rx = s.g.x - targets[i].x, ry = s.g.y - targets[i].y;
    job.res = std::hypot(rx, ry);
    const bool singular = s.jacobian == 0.0 || !std::isfinite(s.jacobian);
    if (job.res <= job.tol) {
      // polish: a few more full steps bring the iterate to rounding level
      if (job.polish++ >= kPolishSteps || singular || job.res == 0.0) {
        job.state = Job::Converged;
        return;
      }
    } else if (singular || job.iterations >= options.maxIterations) {
      job.state = Job::Failed;
      return;
    }
    job.step = {(s.dg[3] * rx - s.dg[1] * ry) / s.jacobian, (-s.dg[2] * rx + s.dg[0] * ry) / s.jacobian};
    job.lambda = 1.0;
  };

  const auto first = C.model->chartAt(seeds);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (usable(first[i]))
      accept(i, *first[i]);
    else
      jobs[i].state = Job::Failed;
  }
  constexpr double kMinLambda = 0x1p-20;
  std::vector<std::size_t> live;
  std::vector<Point2> trials;
  for (;;) {
    live.clear();
    trials.clear();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].state != Job::Live) continue;
      live.push_back(i);
      trials.push_back({jobs[i].p.x - jobs[i].lambda * jobs[i].step.x, jobs[i].p.y - jobs[i].lambda * jobs[i].step.y});
    }
    if (live.empty()) break;
    const auto samples = C.model->chartAt(trials);
    for (std::size_t r = 0; r < live.size(); ++r) {
      const std::size_t i = live[r];
      Job& job = jobs[i];
      const auto& s = samples[r];
      if (usable(s) && std::hypot(s->g.x - targets[i].x, s->g.y - targets[i].y) < job.res) {
        job.p = trials[r];
        ++job.iterations;
        accept(i, *s);
      } else if (job.res <= job.tol) {
        job.state = Job::Converged;  // polishing stalled at rounding level
      } else if ((job.lambda /= 2) < kMinLambda) {
        job.state = Job::Failed;
      }
    }
  }

  const Box& d = C.domain;
  const double slack = 1e-9 * std::max(d.x1 - d.x0, d.y1 - d.y0);
  std::vector<NewtonResult> out(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].state != Job::Converged) continue;
    const Point2 p = jobs[i].p;
    if (options.stayInDomain &&
        (p.x < d.x0 - slack || p.x > d.x1 + slack || p.y < d.y0 - slack || p.y > d.y1 + slack))
      out[i].leftDomain = true;
    else
      out[i].p = p;
  }
  return out;
}

std::vector<PreimageSearch> searchPreimages(const CanonicalForm& C, const std::vector<Point2>& targets,
                                            const InvertOptions& options) {
  const auto tris = chartTriangles(C);
  std::vector<std::size_t> maskedNodes;
  for (std::size_t k = 0; k < C.nodes.size(); ++k)
    if (C.mask[k]) maskedNodes.push_back(k);
  std::vector<std::size_t> owner;
  std::vector<Point2> jobTargets, seeds;
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (const Point2 s : seedsFor(C, tris, maskedNodes, targets[t], options.seeds)) {
      owner.push_back(t);
      jobTargets.push_back(targets[t]);
      seeds.push_back(s);
    }
  InvertOptions confined = options;
  confined.stayInDomain = true;
  const auto results = newtonBatch(C, jobTargets, seeds, confined);
  const Box& d = C.domain;
  const double merge = 1e-7 * std::max(d.x1 - d.x0, d.y1 - d.y0);
  std::vector<PreimageSearch> out(targets.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    PreimageSearch& o = out[owner[i]];
    o.leftDomain = o.leftDomain || results[i].leftDomain;
    if (!results[i].p) continue;
    const Point2 p = *results[i].p;
    const bool seen =
        std::any_of(o.found.begin(), o.found.end(), [&](Point2 f) { return std::hypot(f.x - p.x, f.y - p.y) <= merge; });
    if (!seen) o.found.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<std::optional<Point2>> refinePreimages(const CanonicalForm& C, const std::vector<Point2>& targets,
                                                   const std::vector<Point2>& seeds, const InvertOptions& options) {
  if (!C.model) throw std::invalid_argument("refinePreimages: canonical form has no chart model");
  if (targets.size() != seeds.size()) throw std::invalid_argument("refinePreimages: one seed per target");
  const auto results = newtonBatch(C, targets, seeds, options);
  std::vector<std::optional<Point2>> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.p);
  return out;
}

std::vector<Point2> chartPreimages(const CanonicalForm& C, Point2 target, const InvertOptions& options) {
  return chartPreimages(C, std::vector<Point2>{target}, options)[0];
}

std::vector<std::vector<Point2>> chartPreimages(const CanonicalForm& C, const std::vector<Point2>& targets,
                                                const InvertOptions& options) {
  if (!C.model) throw std::invalid_argument("chartPreimages: canonical form has no chart model");
  auto searches = searchPreimages(C, targets, options);
  std::vector<std::vector<Point2>> out;
  out.reserve(searches.size());
  for (auto& s : searches) out.push_back(std::move(s.found));
  return out;
}

Point2 invertChartAt(const CanonicalForm& C, Point2 target, const InvertOptions& options) {
  if (!C.model) throw std::invalid_argument("invertChartAt: canonical form has no chart model");
  if (!insideHull(C.hull, target)) throw OutOfRange("target lies outside the sampled chart range");
  const auto search = searchPreimages(C, std::vector<Point2>{target}, options)[0];
  if (!search.found.empty()) return search.found.front();
  if (search.leftDomain) throw OutOfRange("the preimage of the target lies outside the domain");
  throw NoConvergence("Newton iteration did not reach the target within " + std::to_string(options.maxIterations) +
                      " iterations");
}

}  // namespace odeinv::canonical
