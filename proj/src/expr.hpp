#pragma once

#include <memory>
#include <string>
#include <vector>

// Minimal closed-form expression evaluator for user-supplied metrics.
// Grammar: + - * / ^ (right-assoc), unary minus, parentheses, one-argument
// functions, constants pi and e. Variables are the chart coordinates, named
// x,y,z or x1,x2,x3.

namespace lab {

class Expr {
 public:
  static Expr parse(const std::string& text, int dim);
  double eval(const double* vars) const;
  const std::string& text() const { return text_; }

  Expr();
  Expr(Expr&&) noexcept;
  Expr& operator=(Expr&&) noexcept;
  Expr(const Expr&);
  Expr& operator=(const Expr&);
  ~Expr();

  struct Node;  // exposed for the parser implementation

 private:
  std::unique_ptr<Node> root_;
  std::string text_;
};

}  // namespace lab
