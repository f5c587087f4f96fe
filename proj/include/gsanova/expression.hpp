#pragma once

// Tiny arithmetic expression evaluator for user-defined truth functions.
// Grammar (recursive descent, right-associative ^):
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | 'pi' | xK | func '(' expr ')' | '(' expr ')'
//
// with variables x1..xd (1-based labels matching the CSV headers) and
// functions sin, cos, tan, exp, log, sqrt, abs. Parsed once into a small
// node tree, evaluated many times.

#include <Eigen/Dense>
#include <memory>
#include <string>

namespace gsanova::expression {

class Expression {
 public:
  // Parses the source; throws std::invalid_argument with a position-tagged
  // message on syntax errors or variable indices beyond d.
  Expression(const std::string& source, int d);
  ~Expression();
  Expression(Expression&&) noexcept;
  Expression& operator=(Expression&&) noexcept;

  [[nodiscard]] double operator()(const Eigen::VectorXd& x) const;
  [[nodiscard]] int dimension() const { return d_; }
  [[nodiscard]] const std::string& source() const { return source_; }

  struct Node;  // exposed for the parser implementation

 private:
  std::unique_ptr<Node> root_;
  std::string source_;
  int d_ = 0;
};

}  // namespace gsanova::expression
