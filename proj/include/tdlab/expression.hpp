#pragma once

#include <memory>
#include <string>

#include "tdlab/grid.hpp"

namespace tdlab {

/// Closed-form expression in x: numbers, x, pi, e, + - * / ^, unary minus,
/// parentheses and the functions sin, cos, exp.
class Expression {
 public:
  struct Node;

  /// Throws ConfigError naming `field` and the column on a syntax error.
  static Expression parse(const std::string& text, const std::string& field = "expression");

  double operator()(double x) const;
  Field on_grid(const Grid& g) const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace tdlab
