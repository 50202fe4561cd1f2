// One PASS/FAIL line per acceptance criterion. Usage: acceptance <odeinv>
#include "odeinv/app/suites.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

namespace {

using odeinv::app::SuiteOptions;
using odeinv::app::SuiteResult;

struct Criterion {
  int id;
  std::string title;
  std::function<SuiteResult(const SuiteOptions&)> suite;
  double seconds;  // runtime limit, 0 for none
};

bool report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("criterion %d %-28s %s  %s\n", id, title.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass;
}

std::string capture(const std::string& command, int& status) {
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  status = pclose(pipe);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path to odeinv>\n", argv[0]);
    return 2;
  }
  namespace app = odeinv::app;
  const SuiteOptions options;  // seed 42, full size
  const Criterion criteria[] = {
      {1, "transcription fixtures", app::transcriptionSuite, 1.0},
      {2, "invariance suite", app::invarianceSuite, 60.0},
      {3, "pushforward laws", app::pushforwardLawSuite, 30.0},
      {4, "solution preservation", app::solutionSuite, 30.0},
      {5, "canonical pipeline", app::pipelineSuite, 120.0},
      {6, "tresse derivatives", app::tresseSuite, 0.0},
  };

  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    const SuiteResult r = c.suite(options);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool inTime = c.seconds <= 0.0 || s < c.seconds;
    char detail[160];
    std::snprintf(detail, sizeof detail, "%d cases, %d checks, %d failures, worst %.3g of limit, %.2f s%s", r.cases,
                  r.checks, r.failures, r.worst, s, inTime ? "" : " (over time)");
    all = report(c.id, c.title, r.pass && inTime, detail) && all;
    for (const auto& note : r.notes) std::printf("    %s\n", note.c_str());
  }

  const std::string command = std::string("\"") + argv[1] + "\" selftest --seed 42";
  int s1 = 0, s2 = 0;
  const std::string first = capture(command, s1);
  const std::string second = capture(command, s2);
  const bool same = !first.empty() && first == second;
  all = report(7, "determinism", same && s1 == 0 && s2 == 0,
               std::to_string(first.size()) + " bytes, " + (same ? "identical" : "different") + ", exit " +
                   std::to_string(s1) + "/" + std::to_string(s2)) &&
        all;

  std::printf("%s\n", all ? "all criteria passed" : "some criteria failed");
  return all ? 0 : 1;
}
