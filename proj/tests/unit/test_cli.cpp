#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <string>
#include <sys/wait.h>

namespace {

const std::string kCli = ODEINV_CLI;
const std::string kData = ODEINV_DATA_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  Run r;
  FILE* pipe = popen(("\"" + kCli + "\" " + args + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return "\"" + kData + "/" + name + "\""; }

}  // namespace

TEST_CASE("classify and canonical on y'' = 0") {
  const Run c = run("classify --ode " + data("zero.ode"));
  CHECK(c.code == 0);
  CHECK(nlohmann::json::parse(c.out)["orbit"]["level"] == "Degenerate2");
  const Run k = run("canonical --ode " + data("zero.ode"));
  CHECK(k.code == 3);
  CHECK(k.out.find("Degenerate2") != std::string::npos);
}

TEST_CASE("invariants of the fixture at (1, 1)") {
  const Run r = run("invariants --ode " + data("fixture.ode") + " --at 1 1");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schemaVersion"] == 1);
  CHECK(j["values"]["L3"].get<double>() == 9504.0);
  CHECK(j["values"]["I1"].get<double>() == doctest::Approx(-0.79702299204).epsilon(1e-11));
  CHECK(j["pointOrbit"]["level"] == "GeneralPosition3");
  for (const char* key : {"L1", "L2", "L3", "Psi1", "Psi2", "xi1.x", "xi1.y", "xi2.x", "xi2.y", "nu", "I1", "I2"})
    CHECK(j["expressions"].contains(key));
}

TEST_CASE("parse errors exit 2 with the position") {
  const std::string bad = "/tmp/odeinv_test_bad.ode";
  FILE* f = std::fopen(bad.c_str(), "w");
  REQUIRE(f != nullptr);
  std::fputs("a0 = y^2 +* x\n", f);
  std::fclose(f);
  const Run r = run("classify --ode " + bad);
  CHECK(r.code == 2);
  CHECK(r.out.find("position 5") != std::string::npos);
  CHECK(r.out.find("line 1") != std::string::npos);
  CHECK(run("canonical --ode " + data("random.ode") + " --grid 3").code == 2);
  std::remove(bad.c_str());
}

TEST_CASE("canonical CSV layout") {
  const Run r = run("canonical --ode " + data("random.ode") + " --grid 5 --format csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("x,y,xt,yt,jac,mask,J0,J1,J2,J3\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 26);
}

TEST_CASE("equiv exit codes") {
  const Run same = run("equiv --ode " + data("random.ode") + " --ode2 " + data("random.ode"));
  CHECK(same.code == 0);
  const auto j = nlohmann::json::parse(same.out);
  for (const auto& s : j["mapSamples"]) {
    CHECK(s["q"][0].get<double>() == doctest::Approx(s["p"][0].get<double>()).epsilon(1e-8));
    CHECK(s["q"][1].get<double>() == doctest::Approx(s["p"][1].get<double>()).epsilon(1e-8));
  }

  const std::string pushed = "/tmp/odeinv_test_pushed.ode";
  REQUIRE(run("transform --ode " + data("random.ode") + " --map " + data("shear.map") + " --out " + pushed).code == 0);
  const Run pair = run("equiv --ode " + data("random.ode") + " --ode2 " + pushed);
  CHECK(pair.code == 0);
  const auto fit = nlohmann::json::parse(pair.out)["fittedMap"];
  REQUIRE(fit.is_object());
  CHECK(fit["cy"][0].get<double>() == doctest::Approx(0.1).epsilon(1e-6));
  std::remove(pushed.c_str());

  CHECK(run("equiv --ode " + data("random.ode") + " --ode2 " + data("random_perturbed.ode")).code == 1);
}

TEST_CASE("reduced selftest passes and repeats") {
  const Run a = run("selftest --seed 7 --trials 1");
  const Run b = run("selftest --seed 7 --trials 1");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("all suites passed") != std::string::npos);
}
