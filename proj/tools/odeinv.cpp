#include "odeinv/app/suites.hpp"
#include "odeinv/canonical/equivalence.hpp"
#include "odeinv/expr/parse.hpp"
#include "odeinv/ode/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace odeinv;
using canonical::EquivalenceStatus;
using expr::Box;
using expr::Expr;
using expr::Point2;
using invariants::CubicODE;
using nlohmann::ordered_json;

const Box kUnitBox{-1.0, 1.0, -1.0, 1.0};

enum Exit { kOk = 0, kNotEquivalent = 1, kInputError = 2, kDegenerate = 3, kInconclusive = 4 };

struct Config {
  std::string ode, ode2, map, out;
  std::vector<double> domain, domain2, at;
  int grid = 41;
  double tol = 1e-5;
  std::uint64_t seed = 42;
  int trials = 0;
  std::string format = "json";
};

// Raised for bad input that CLI11 cannot see (files, domains).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 12 significant digits; the shortest round trip of the rounded value
// never needs more.
ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

ordered_json point(Point2 p) { return ordered_json::array({num(p.x), num(p.y)}); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw InputError("cannot write '" + cfg.out + "'");
  f << text;
}

void emit(const Config& cfg, const ordered_json& j) { emit(cfg, j.dump(2) + "\n"); }

ordered_json header(const std::string& command) {
  ordered_json j;
  j["schemaVersion"] = 1;
  j["command"] = command;
  return j;
}

CubicODE loadODE(const std::string& path) {
  if (path.empty()) throw InputError("an ODE file is required (--ode)");
  try {
    return ode::parseODE(ode::readFile(path));
  } catch (const ode::FileFormatError& e) {
    throw InputError(path + ": " + e.what());
  }
}

ode::PointMap loadMap(const std::string& path) {
  if (path.empty()) throw InputError("a map file is required (--map)");
  try {
    return ode::parsePointMap(ode::readFile(path));
  } catch (const ode::FileFormatError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const ode::MapInvalid& e) {
    throw InputError(path + ": " + e.what());
  }
}

Box boxFrom(const std::vector<double>& v, const Box& fallback) {
  if (v.empty()) return fallback;
  const Box b{v[0], v[1], v[2], v[3]};
  if (!(b.x0 < b.x1 && b.y0 < b.y1)) throw InputError("domain needs x0 < x1 and y0 < y1");
  return b;
}

ordered_json orbitJson(const invariants::OrbitClass& c) {
  ordered_json j;
  j["level"] = std::string(invariants::levelName(c.level));
  j["pointwise"] = c.pointwise;
  j["note"] = c.note;
  return j;
}

ordered_json valueAt(const Expr& e, Point2 p) {
  try {
    return num(expr::eval(e, p));
  } catch (const expr::EvalError&) {
    return nullptr;
  }
}

ordered_json odeJson(const CubicODE& E) {
  ordered_json j;
  for (int i = 0; i < 4; ++i) j["a" + std::to_string(i)] = expr::print(E.a[i]);
  return j;
}

int runParseCheck(const Config& cfg) {
  ordered_json j = header("parse-check");
  j["ode"] = odeJson(loadODE(cfg.ode));
  if (!cfg.map.empty()) {
    const ode::PointMap f = loadMap(cfg.map);
    j["map"] = {{"fx", expr::print(f.phi())},
                {"fy", expr::print(f.psi())},
                {"invx", expr::print(f.invPhi())},
                {"invy", expr::print(f.invPsi())}};
  }
  emit(cfg, j);
  return kOk;
}

int runClassify(const Config& cfg) {
  const CubicODE E = loadODE(cfg.ode);
  ordered_json j = header("classify");
  j["orbit"] = orbitJson(invariants::classifyOrbit(E));
  if (!cfg.at.empty()) {
    j["at"] = point({cfg.at[0], cfg.at[1]});
    j["pointOrbit"] = orbitJson(invariants::classifyOrbit(E, {cfg.at[0], cfg.at[1]}));
  }
  emit(cfg, j);
  return kOk;
}

int runInvariants(const Config& cfg) {
  const CubicODE E = loadODE(cfg.ode);
  const std::optional<Point2> at = cfg.at.empty() ? std::nullopt : std::optional<Point2>({cfg.at[0], cfg.at[1]});
  ordered_json j = header("invariants");
  j["orbit"] = orbitJson(invariants::classifyOrbit(E));
  if (at) j["pointOrbit"] = orbitJson(invariants::classifyOrbit(E, *at));

  std::vector<std::pair<std::string, Expr>> named;
  int code = kOk;
  try {
    const invariants::InvariantBundle B = invariants::computeInvariants(E);
    named = {{"L1", B.L1},         {"L2", B.L2},         {"L3", B.L3},         {"Psi1", B.Psi1},
             {"Psi2", B.Psi2},     {"xi1.x", B.xi1[0]},  {"xi1.y", B.xi1[1]},  {"xi2.x", B.xi2[0]},
             {"xi2.y", B.xi2[1]},  {"nu", B.nuDensity},  {"I1", B.I1},         {"I2", B.I2}};
  } catch (const invariants::DegenerateOrbit& e) {
    // the frame, nu and I1, I2 need L3 != 0; the relative invariants do not
    const auto [L1, L2] = invariants::relativeInvariantsL(E);
    const auto [P1, P2] = invariants::psiInvariants(E, L1, L2);
    named = {{"L1", L1}, {"L2", L2}, {"L3", invariants::relativeInvariantL3(E, L1, L2)}, {"Psi1", P1}, {"Psi2", P2}};
    j["error"] = e.what();
    code = kDegenerate;
  }
  ordered_json exprs = ordered_json::object();
  for (const auto& [name, e] : named) exprs[name] = expr::print(e);
  j["expressions"] = exprs;
  if (at) {
    ordered_json values = ordered_json::object();
    for (const auto& [name, e] : named) values[name] = valueAt(e, *at);
    j["at"] = point(*at);
    j["values"] = values;
  }
  emit(cfg, j);
  return code;
}

int runTransform(const Config& cfg) {
  const CubicODE E = loadODE(cfg.ode);
  const ode::PointMap f = loadMap(cfg.map);
  emit(cfg, ode::formatODE(ode::pushforwardODE(E, f)));
  return kOk;
}

int runCanonical(const Config& cfg) {
  const CubicODE E = loadODE(cfg.ode);
  const Box domain = boxFrom(cfg.domain, kUnitBox);
  const canonical::CanonicalForm C = canonical::canonicalForm(E, domain, cfg.grid);
  const std::size_t n = C.nodes.size();
  if (cfg.format == "csv") {
    std::string s = "x,y,xt,yt,jac,mask,J0,J1,J2,J3\n";
    for (std::size_t k = 0; k < n; ++k) {
      s += fmt(C.nodes[k].x) + "," + fmt(C.nodes[k].y) + "," + fmt(C.gValues[k].x) + "," + fmt(C.gValues[k].y) + "," +
           fmt(C.jacobian[k]) + "," + (C.mask[k] ? "1" : "0");
      for (double c : C.coeffs[k]) s += "," + fmt(c);
      s += "\n";
    }
    emit(cfg, s);
    return kOk;
  }
  ordered_json j = header("canonical");
  j["domain"] = {num(domain.x0), num(domain.x1), num(domain.y0), num(domain.y1)};
  j["grid"] = cfg.grid;
  j["masked"] = C.maskedCount();
  ordered_json nodes = ordered_json::array();
  for (std::size_t k = 0; k < n; ++k) {
    ordered_json coeffs = ordered_json::array();
    for (double c : C.coeffs[k]) coeffs.push_back(num(c));
    nodes.push_back({{"p", point(C.nodes[k])},
                     {"g", point(C.gValues[k])},
                     {"jac", num(C.jacobian[k])},
                     {"mask", C.mask[k] != 0},
                     {"J", coeffs}});
  }
  j["nodes"] = nodes;
  emit(cfg, j);
  return kOk;
}

int runEquiv(const Config& cfg) {
  const CubicODE E1 = loadODE(cfg.ode);
  if (cfg.ode2.empty()) throw InputError("a second ODE file is required (--ode2)");
  const CubicODE E2 = loadODE(cfg.ode2);
  const Box dom1 = boxFrom(cfg.domain, kUnitBox);
  const Box dom2 = boxFrom(cfg.domain2, dom1);
  canonical::EquivalenceOptions options;
  options.tol = cfg.tol;
  const canonical::EquivalenceVerdict v = canonical::decideEquivalence(E1, E2, dom1, dom2, cfg.grid, options);

  ordered_json j = header("equiv");
  j["status"] = std::string(canonical::statusName(v.status));
  j["maxDeviation"] = num(v.maxDeviation);
  j["coverage"] = num(v.coverage);
  j["tolerance"] = num(cfg.tol);
  j["nodes"] = v.nodes;
  j["masked"] = v.masked;
  j["matched"] = v.matched;
  j["outOfRange"] = v.outOfRange;
  j["noConvergence"] = v.noConvergence;
  j["unverified"] = v.unverified;
  ordered_json samples = ordered_json::array();
  for (const auto& s : v.recoveredMap) samples.push_back({{"p", point(s.p)}, {"q", point(s.q)}});
  j["mapSamples"] = samples;
  if (v.fittedMap) {
    const auto& F = *v.fittedMap;
    ordered_json monomials = ordered_json::array(), cx = ordered_json::array(), cy = ordered_json::array();
    for (std::size_t k = 0; k < F.monomials.size(); ++k) {
      monomials.push_back({F.monomials[k].first, F.monomials[k].second});
      cx.push_back(num(F.cx[k]));
      cy.push_back(num(F.cy[k]));
    }
    j["fittedMap"] = {{"degree", F.degree}, {"monomials", monomials}, {"cx", cx}, {"cy", cy},
                      {"rmsResidual", num(F.rmsResidual)}};
  } else {
    j["fittedMap"] = nullptr;
  }
  j["notes"] = v.notes;
  emit(cfg, j);
  switch (v.status) {
    case EquivalenceStatus::Equivalent: return kOk;
    case EquivalenceStatus::NotEquivalent: return kNotEquivalent;
    case EquivalenceStatus::Inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

int runSelftest(const Config& cfg) {
  app::SuiteOptions options;
  options.seed = cfg.seed;
  options.trials = cfg.trials;
  const auto results = app::runAllSuites(options);
  emit(cfg, app::formatSuiteTable(results, options));
  for (const auto& r : results)
    if (!r.pass) return 1;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Differential invariants and point equivalence of y'' = a3 y'^3 + a2 y'^2 + a1 y' + a0"};
  cli.require_subcommand(1);
  Config cfg;

  auto odeOpt = [&](CLI::App* s) { s->add_option("--ode", cfg.ode, "ODE file (a0 = ..., a3 = ...)")->required(); };
  auto domainOpt = [&](CLI::App* s) {
    s->add_option("--domain", cfg.domain, "x0 x1 y0 y1 (default -1 1 -1 1)")->expected(4);
  };
  auto gridOpt = [&](CLI::App* s) {
    s->add_option("--grid", cfg.grid, "lattice size n (n x n nodes)")->check(CLI::Range(5, 1000));
  };
  auto atOpt = [&](CLI::App* s) { s->add_option("--at", cfg.at, "x y")->expected(2); };
  auto outOpt = [&](CLI::App* s) { s->add_option("--out", cfg.out, "write the report here instead of stdout"); };

  auto* parseCheck = cli.add_subcommand("parse-check", "parse an ODE file and optionally a map file");
  odeOpt(parseCheck);
  parseCheck->add_option("--map", cfg.map, "map file (fx, fy, invx, invy, domain)");
  outOpt(parseCheck);

  auto* invariantsCmd = cli.add_subcommand("invariants", "L1, L2, L3, Psi, frame, nu, I1, I2 as JSON");
  odeOpt(invariantsCmd);
  atOpt(invariantsCmd);
  outOpt(invariantsCmd);

  auto* classify = cli.add_subcommand("classify", "orbit class, whole domain and optionally at a point");
  odeOpt(classify);
  atOpt(classify);
  outOpt(classify);

  auto* transform = cli.add_subcommand("transform", "pushforward of an ODE by a point map, as an ODE file");
  odeOpt(transform);
  transform->add_option("--map", cfg.map, "map file")->required();
  outOpt(transform);

  auto* canonicalCmd = cli.add_subcommand("canonical", "chart and canonical coefficients on a lattice");
  odeOpt(canonicalCmd);
  domainOpt(canonicalCmd);
  gridOpt(canonicalCmd);
  canonicalCmd->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  outOpt(canonicalCmd);

  auto* equiv = cli.add_subcommand("equiv", "decide point equivalence and recover the map");
  odeOpt(equiv);
  equiv->add_option("--ode2", cfg.ode2, "second ODE file")->required();
  domainOpt(equiv);
  equiv->add_option("--domain2", cfg.domain2, "domain of the second equation (default: --domain)")->expected(4);
  gridOpt(equiv);
  equiv->add_option("--tol", cfg.tol, "relative tolerance on canonical coefficients")->check(CLI::PositiveNumber);
  outOpt(equiv);

  auto* selftest = cli.add_subcommand("selftest", "seeded property suites, pass/fail table");
  selftest->add_option("--seed", cfg.seed, "suite seed");
  selftest->add_option("--trials", cfg.trials, "cases per suite (0: full size)")->check(CLI::NonNegativeNumber);
  outOpt(selftest);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kInputError;
  }

  try {
    if (*parseCheck) return runParseCheck(cfg);
    if (*invariantsCmd) return runInvariants(cfg);
    if (*classify) return runClassify(cfg);
    if (*transform) return runTransform(cfg);
    if (*canonicalCmd) return runCanonical(cfg);
    if (*equiv) return runEquiv(cfg);
    if (*selftest) return runSelftest(cfg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const invariants::DegenerateOrbit& e) {
    std::cerr << "degenerate orbit: " << e.what() << "\n";
    if (!cfg.ode.empty()) {
      const auto c = invariants::classifyOrbit(loadODE(cfg.ode));
      std::cerr << "orbit class: " << invariants::levelName(c.level) << "\n";
    }
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
