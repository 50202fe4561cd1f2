#include "odeinv/ode/io.hpp"

#include "odeinv/expr/parse.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace odeinv::ode {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Assignment {
  int line;
  std::string value;
};

/// Splits `key = value` lines; rejects unknown and repeated keys.
std::map<std::string, Assignment> readAssignments(std::string_view text, std::initializer_list<std::string_view> keys) {
  std::map<std::string, Assignment> out;
  int lineNo = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineNo;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FileFormatError(lineNo, "line " + std::to_string(lineNo) + ": expected 'name = value'");
    const std::string key(trim(line.substr(0, eq)));
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw FileFormatError(lineNo, "line " + std::to_string(lineNo) + ": unknown key '" + key + "'");
    if (out.count(key)) throw FileFormatError(lineNo, "line " + std::to_string(lineNo) + ": '" + key + "' given twice");
    out.emplace(key, Assignment{lineNo, std::string(trim(line.substr(eq + 1)))});
  }
  return out;
}

Expr parseField(const std::string& key, const Assignment& a) {
  try {
    return expr::parse(a.value);
  } catch (const expr::ParseError& err) {
    throw FileFormatError(a.line, "line " + std::to_string(a.line) + " (" + key + "): " + err.what());
  }
}

std::string formatDouble(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

CubicODE parseODE(std::string_view text) {
  const auto fields = readAssignments(text, {"a0", "a1", "a2", "a3"});
  CubicODE E;
  for (int i = 0; i < 4; ++i) {
    const auto it = fields.find("a" + std::to_string(i));
    if (it != fields.end()) E.a[i] = parseField(it->first, it->second);
  }
  return E;
}

PointMap parsePointMap(std::string_view text) {
  const auto fields = readAssignments(text, {"fx", "fy", "invx", "invy", "domain"});
  for (const char* k : {"fx", "fy", "invx", "invy", "domain"})
    if (!fields.count(k)) throw FileFormatError(0, std::string("map file is missing '") + k + "'");
  const Assignment& d = fields.at("domain");
  std::istringstream in(d.value);
  Box box;
  if (!(in >> box.x0 >> box.x1 >> box.y0 >> box.y1) || !(in >> std::ws).eof())
    throw FileFormatError(d.line, "line " + std::to_string(d.line) + ": domain needs four numbers x0 x1 y0 y1");
  auto field = [&](const char* k) { return parseField(k, fields.at(k)); };
  return PointMap::make(field("fx"), field("fy"), field("invx"), field("invy"), box);
}

std::string formatODE(const CubicODE& E) {
  std::string out;
  for (int i = 0; i < 4; ++i) out += "a" + std::to_string(i) + " = " + expr::print(E.a[i]) + "\n";
  return out;
}

std::string formatPointMap(const PointMap& f) {
  const Box& b = f.domain();
  return "fx = " + expr::print(f.phi()) + "\nfy = " + expr::print(f.psi()) + "\ninvx = " + expr::print(f.invPhi()) +
         "\ninvy = " + expr::print(f.invPsi()) + "\ndomain = " + formatDouble(b.x0) + " " + formatDouble(b.x1) + " " +
         formatDouble(b.y0) + " " + formatDouble(b.y1) + "\n";
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace odeinv::ode
