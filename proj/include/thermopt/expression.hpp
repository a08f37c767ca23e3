#pragma once

#include "thermopt/mesh.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace thermopt {

/// Parse failure with a 1-based column into the expression text.
class ExpressionError : public ConfigError {
 public:
  ExpressionError(const std::string& what, int column) : ConfigError(what), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Closed-form scalar function of (x, y, z).
///
/// Grammar: numbers, x y z, pi, + - * / ^ (right associative), unary minus,
/// parentheses and the functions exp sin cos sqrt.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);

  double operator()(const Point& p) const;
  const std::string& text() const { return text_; }
  /// True when the value does not depend on the coordinates.
  bool is_constant() const;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace thermopt
