#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hforge/dual.hpp"
#include "hforge/field.hpp"

namespace hforge {

/// Syntax or semantic error in a scenario expression; `position` is a byte offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}
  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// A closed-form scalar expression in the chart variables x, y, r, theta.
///
/// Grammar (whitespace-insensitive):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?
///     primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// Names: x y r theta pi e. Functions: sin cos tan exp log sqrt tanh abs with one
/// argument; step(u,lo,hi), bump(u,lo,hi), plateau(u,a,b,c,d) where every argument
/// after the first must be a constant.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);

  [[nodiscard]] Dual eval(const DualPoint& p) const;
  [[nodiscard]] double eval(double x, double y, double r, double theta) const;
  [[nodiscard]] const std::string& source() const { return source_; }
  /// True when the expression does not mention any chart variable.
  [[nodiscard]] bool is_constant() const;
  /// True when the expression does not mention r or theta.
  [[nodiscard]] bool is_fiber_constant() const;
  /// True when the expression mentions only chart variables in `allowed`, a bitmask with
  /// x = 1, y = 2, r = 4, theta = 8.
  [[nodiscard]] bool uses_only(unsigned allowed) const;
  [[nodiscard]] Field to_field() const;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace hforge
