#include "odeinv/expr/parse.hpp"

#include <cctype>
#include <climits>
#include <sstream>

namespace odeinv::expr {

ParseError::ParseError(Reason reason, std::size_t position, const std::string& message)
    : std::runtime_error(message + " at position " + std::to_string(position)), reason_(reason), position_(position) {}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parseAll() {
    Expr e = parseExpr();
    skipSpace();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(ParseError::Reason::Syntax, pos_, msg); }

  void skipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skipSpace();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Expr parseExpr() {
    std::vector<Expr> terms{parseTerm()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(parseTerm());
      } else if (accept('-')) {
        terms.push_back(Expr::rawProduct({Expr(-1), parseTerm()}));
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms.front() : Expr::rawSum(std::move(terms));
  }

  Expr parseTerm() {
    std::vector<Expr> factors{parseFactor()};
    for (;;) {
      if (accept('*')) {
        factors.push_back(parseFactor());
      } else if (accept('/')) {
        factors.push_back(Expr::rawPower(parseFactor(), Rational(-1)));
      } else {
        break;
      }
    }
    return factors.size() == 1 ? factors.front() : Expr::rawProduct(std::move(factors));
  }

  Expr parseFactor() {
    if (accept('-')) return Expr::rawProduct({Expr(-1), parseFactor()});
    Expr base = parseBase();
    if (accept('^')) {
      Rational exponent = parseExponent();
      return Expr::rawPower(base, exponent);
    }
    return base;
  }

  Expr parseBase() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr inner = parseExpr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr::constant(parseNumber());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "x") return Expr::x();
      if (ident == "y") return Expr::y();
      throw ParseError(ParseError::Reason::UnknownIdentifier, start, "unknown identifier '" + std::string(ident) + "'");
    }
    if (c == '\0') fail("unexpected end of input");
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  std::string digits() {
    std::string out;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) out.push_back(text_[pos_++]);
    return out;
  }

  Rational parseNumber() {
    skipSpace();
    const std::size_t start = pos_;
    std::string intPart = digits();
    std::string fracPart;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      fracPart = digits();
    }
    if (intPart.empty() && fracPart.empty()) {
      pos_ = start;
      fail("malformed number");
    }
    long exp10 = 0;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      bool negative = false;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) negative = text_[pos_++] == '-';
      std::string ed = digits();
      if (ed.empty() || ed.size() > 4) {
        pos_ = save;
        fail("malformed exponent in number");
      }
      exp10 = std::stol(ed) * (negative ? -1 : 1);
    }
    mpz_class mantissa((intPart.empty() ? "0" : intPart) + fracPart, 10);
    exp10 -= static_cast<long>(fracPart.size());
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    Rational out = exp10 < 0 ? Rational(mantissa, scale) : Rational(mantissa * scale);
    out.canonicalize();
    return out;
  }

  Rational parseSignedRational() {
    bool negative = false;
    if (accept('-')) {
      negative = true;
    } else {
      accept('+');
    }
    skipSpace();
    if (!(std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) fail("expected exponent");
    Rational value = parseNumber();
    if (accept('/')) {
      skipSpace();
      const std::size_t at = pos_;
      std::string den = digits();
      if (den.empty() || mpz_class(den) == 0) {
        pos_ = at;
        fail("expected positive integer denominator");
      }
      value /= Rational(mpz_class(den));
    }
    value.canonicalize();
    return negative ? Rational(-value) : value;
  }

  Rational parseExponent() {
    const std::size_t at = pos_;
    Rational r;
    if (accept('(')) {
      r = parseSignedRational();
      if (!accept(')')) fail("expected ')' after exponent");
    } else {
      r = parseSignedRational();
    }
    if (abs(r.get_num()) > INT_MAX / 2 || r.get_den() > INT_MAX / 2) {
      pos_ = at;
      fail("exponent too large");
    }
    return r;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool negativeLeading(const Expr& e) {
  if (e.isConstant()) return e.value() < 0;
  if (e.kind() == Kind::Product && !e.operands().empty() && e.operands()[0].isConstant())
    return e.operands()[0].value() < 0;
  return false;
}

enum class Context { Top, Factor, PowerBase };

void printTo(std::ostringstream& out, const Expr& e, Context ctx);

void printRational(std::ostringstream& out, const Rational& r, Context ctx) {
  const bool wrap = (ctx == Context::PowerBase && (r < 0 || !isInteger(r))) || (ctx == Context::Factor && r < 0);
  if (wrap) out << '(';
  out << r.get_str();
  if (wrap) out << ')';
}

void printProduct(std::ostringstream& out, const Expr& e) {
  auto ops = e.operands();
  std::size_t i = 0;
  bool first = true;
  if (!ops.empty() && ops[0].isConstant()) {
    const Rational& c = ops[0].value();
    if (c == -1 && ops.size() > 1) {
      out << '-';
    } else if (c != 1 || ops.size() == 1) {
      printRational(out, c, Context::Top);
      first = false;
    }
    i = 1;
  }
  for (; i < ops.size(); ++i) {
    if (!first) out << '*';
    first = false;
    printTo(out, ops[i], Context::Factor);
  }
}

void printTo(std::ostringstream& out, const Expr& e, Context ctx) {
  switch (e.kind()) {
    case Kind::Const: printRational(out, e.value(), ctx); break;
    case Kind::Var: out << (e.variable() == Var::X ? 'x' : 'y'); break;
    case Kind::Power: {
      printTo(out, e.base(), Context::PowerBase);
      const Rational& r = e.exponent();
      if (isInteger(r) && r > 0) {
        out << '^' << r.get_str();
      } else {
        out << "^(" << r.get_str() << ')';
      }
      break;
    }
    case Kind::Product: {
      const bool wrap = ctx != Context::Top;
      if (wrap) out << '(';
      printProduct(out, e);
      if (wrap) out << ')';
      break;
    }
    case Kind::Sum: {
      const bool wrap = ctx != Context::Top;
      if (wrap) out << '(';
      auto ops = e.operands();
      for (std::size_t i = 0; i < ops.size(); ++i) {
        if (i == 0) {
          printTo(out, ops[i], Context::Top);
        } else if (negativeLeading(ops[i])) {
          out << " - ";
          printTo(out, -ops[i], Context::Top);
        } else {
          out << " + ";
          printTo(out, ops[i], Context::Top);
        }
      }
      if (wrap) out << ')';
      break;
    }
  }
}

}  // namespace

Expr parseRaw(std::string_view text) { return Parser(text).parseAll(); }

Expr parse(std::string_view text) { return simplify(parseRaw(text)); }

std::string print(const Expr& e) {
  std::ostringstream out;
  printTo(out, e, Context::Top);
  return out.str();
}

}  // namespace odeinv::expr
