#pragma once

#include "odeinv/expr/expr.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace odeinv::expr {

class ParseError : public std::runtime_error {
 public:
  enum class Reason { Syntax, UnknownIdentifier };

  ParseError(Reason reason, std::size_t position, const std::string& message);

  Reason reason() const { return reason_; }
  /// Zero-based character offset into the parsed text.
  std::size_t position() const { return position_; }

 private:
  Reason reason_;
  std::size_t position_;
};

/// Parses the expression grammar
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' exponent)?
///   base   := 'x' | 'y' | number | '(' expr ')'
///   exponent := signed-rational | '(' signed-rational ')'
///
/// Numbers are integers or decimals (optionally with an e-exponent) and are
/// converted to exact rationals. Note that `x^2/3` is x^(2/3): the exponent
/// is a signed rational. The result is in normal form.
Expr parse(std::string_view text);

/// Same grammar, but returns the tree verbatim without normalisation.
Expr parseRaw(std::string_view text);

/// Prints in the grammar above; parse(print(e)) is equivalent to e.
std::string print(const Expr& e);

}  // namespace odeinv::expr
