#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hare/interval.hpp"

namespace hare {

// Immutable arithmetic expression tree for flow right-hand sides.
// Supported operations: constants, variables, + - * /, unary negation,
// integer powers, sin, cos, exp.
class Expr {
 public:
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

  struct Node {
    Kind kind;
    double value = 0.0;  // Constant
    int var = -1;        // Variable
    int exponent = 0;    // Pow
    std::shared_ptr<const Node> a, b;
  };

  Expr() = default;

  static Expr constant(double c);
  static Expr variable(int var_index);
  static Expr add(const Expr& a, const Expr& b);
  static Expr sub(const Expr& a, const Expr& b);
  static Expr mul(const Expr& a, const Expr& b);
  static Expr div(const Expr& a, const Expr& b);
  static Expr neg(const Expr& a);
  static Expr pow(const Expr& base, int exponent);
  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);
  static Expr exp(const Expr& a);

  bool empty() const { return root_ == nullptr; }
  Kind kind() const { return root_->kind; }
  const Node& node() const { return *root_; }

  // True iff the tree is a bare constant (no variables, no operators).
  bool is_constant() const { return root_ && root_->kind == Kind::Constant; }
  double constant_value() const { return root_->value; }

  // Indices of all variables referenced anywhere in the tree.
  std::vector<int> variables() const;

  std::string to_string(const std::vector<std::string>& var_names) const;

  bool structurally_equal(const Expr& other) const;

 private:
  explicit Expr(std::shared_ptr<const Node> r) : root_(std::move(r)) {}
  std::shared_ptr<const Node> root_;

  friend double eval_expr(const Expr&, std::span<const double>);
  friend Interval eval_interval_node(const Node&, std::span<const Interval>,
                                     const std::vector<std::string>&);
};

// Evaluate at a point valuation (indexed by variable index).
// Throws EvalError on division by zero, naming the offending subterm.
double eval_expr(const Expr& e, std::span<const double> valuation);

}  // namespace hare
