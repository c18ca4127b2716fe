#include "hare/expr.hpp"

#include <cmath>

#include "hare/errors.hpp"
#include "hare/numfmt.hpp"

namespace hare {

namespace {

std::shared_ptr<const Expr::Node> make_node(Expr::Node n) {
  return std::make_shared<const Expr::Node>(std::move(n));
}

}  // namespace

Expr Expr::constant(double c) {
  Node n;
  n.kind = Kind::Constant;
  n.value = c;
  return Expr(make_node(std::move(n)));
}

Expr Expr::variable(int var_index) {
  Node n;
  n.kind = Kind::Variable;
  n.var = var_index;
  return Expr(make_node(std::move(n)));
}

Expr Expr::add(const Expr& a, const Expr& b) {
  Node n;
  n.kind = Kind::Add;
  n.a = a.root_;
  n.b = b.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::sub(const Expr& a, const Expr& b) {
  Node n;
  n.kind = Kind::Sub;
  n.a = a.root_;
  n.b = b.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::mul(const Expr& a, const Expr& b) {
  Node n;
  n.kind = Kind::Mul;
  n.a = a.root_;
  n.b = b.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::div(const Expr& a, const Expr& b) {
  Node n;
  n.kind = Kind::Div;
  n.a = a.root_;
  n.b = b.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::neg(const Expr& a) {
  Node n;
  n.kind = Kind::Neg;
  n.a = a.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::pow(const Expr& base, int exponent) {
  Node n;
  n.kind = Kind::Pow;
  n.a = base.root_;
  n.exponent = exponent;
  return Expr(make_node(std::move(n)));
}

Expr Expr::sin(const Expr& a) {
  Node n;
  n.kind = Kind::Sin;
  n.a = a.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::cos(const Expr& a) {
  Node n;
  n.kind = Kind::Cos;
  n.a = a.root_;
  return Expr(make_node(std::move(n)));
}

Expr Expr::exp(const Expr& a) {
  Node n;
  n.kind = Kind::Exp;
  n.a = a.root_;
  return Expr(make_node(std::move(n)));
}

namespace {

void collect_vars(const Expr::Node* n, std::vector<int>& out) {
  if (!n) return;
  if (n->kind == Expr::Kind::Variable) out.push_back(n->var);
  collect_vars(n->a.get(), out);
  collect_vars(n->b.get(), out);
}

double eval_node(const Expr::Node& n, std::span<const double> v,
                 const Expr::Node* root);

std::string node_text(const Expr::Node& n) {
  // Positional debug rendering for error messages; variable names are not
  // available at evaluation time.
  switch (n.kind) {
    case Expr::Kind::Constant: return format_double(n.value);
    case Expr::Kind::Variable: return "x" + std::to_string(n.var);
    case Expr::Kind::Add: return "(" + node_text(*n.a) + " + " + node_text(*n.b) + ")";
    case Expr::Kind::Sub: return "(" + node_text(*n.a) + " - " + node_text(*n.b) + ")";
    case Expr::Kind::Mul: return "(" + node_text(*n.a) + " * " + node_text(*n.b) + ")";
    case Expr::Kind::Div: return "(" + node_text(*n.a) + " / " + node_text(*n.b) + ")";
    case Expr::Kind::Neg: return "-" + node_text(*n.a);
    case Expr::Kind::Pow: return node_text(*n.a) + " ^ " + std::to_string(n.exponent);
    case Expr::Kind::Sin: return "sin(" + node_text(*n.a) + ")";
    case Expr::Kind::Cos: return "cos(" + node_text(*n.a) + ")";
    case Expr::Kind::Exp: return "exp(" + node_text(*n.a) + ")";
  }
  return "?";
}

double eval_node(const Expr::Node& n, std::span<const double> v,
                 const Expr::Node*) {
  switch (n.kind) {
    case Expr::Kind::Constant: return n.value;
    case Expr::Kind::Variable: return v[static_cast<size_t>(n.var)];
    case Expr::Kind::Add: return eval_node(*n.a, v, nullptr) + eval_node(*n.b, v, nullptr);
    case Expr::Kind::Sub: return eval_node(*n.a, v, nullptr) - eval_node(*n.b, v, nullptr);
    case Expr::Kind::Mul: return eval_node(*n.a, v, nullptr) * eval_node(*n.b, v, nullptr);
    case Expr::Kind::Div: {
      const double den = eval_node(*n.b, v, nullptr);
      if (den == 0.0) throw EvalError(node_text(n), "division by zero in " + node_text(n));
      return eval_node(*n.a, v, nullptr) / den;
    }
    case Expr::Kind::Neg: return -eval_node(*n.a, v, nullptr);
    case Expr::Kind::Pow: {
      const double base = eval_node(*n.a, v, nullptr);
      if (n.exponent < 0 && base == 0.0)
        throw EvalError(node_text(n), "division by zero in " + node_text(n));
      return std::pow(base, n.exponent);
    }
    case Expr::Kind::Sin: return std::sin(eval_node(*n.a, v, nullptr));
    case Expr::Kind::Cos: return std::cos(eval_node(*n.a, v, nullptr));
    case Expr::Kind::Exp: return std::exp(eval_node(*n.a, v, nullptr));
  }
  throw EvalError("?", "corrupt expression node");
}

bool nodes_equal(const Expr::Node* a, const Expr::Node* b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::Constant: return a->value == b->value;
    case Expr::Kind::Variable: return a->var == b->var;
    case Expr::Kind::Pow:
      return a->exponent == b->exponent && nodes_equal(a->a.get(), b->a.get());
    default:
      return nodes_equal(a->a.get(), b->a.get()) && nodes_equal(a->b.get(), b->b.get());
  }
}

// Grammar precedence: + - (1) < * / (2) < ^ (3) < unary - (4) < atoms.
// Note unary minus binds tighter than ^, so -x^2 means (-x)^2.
int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 1;
    case Expr::Kind::Mul:
    case Expr::Kind::Div: return 2;
    case Expr::Kind::Pow: return 3;
    case Expr::Kind::Neg: return 4;
    default: return 5;
  }
}

std::string print_node(const Expr::Node& n, const std::vector<std::string>& names,
                       int min_level) {
  const int level = precedence(n.kind);
  std::string body;
  switch (n.kind) {
    case Expr::Kind::Constant:
      body = format_double(n.value);
      break;
    case Expr::Kind::Variable:
      body = names.at(static_cast<size_t>(n.var));
      break;
    case Expr::Kind::Add:
      body = print_node(*n.a, names, 1) + " + " + print_node(*n.b, names, 2);
      break;
    case Expr::Kind::Sub:
      body = print_node(*n.a, names, 1) + " - " + print_node(*n.b, names, 2);
      break;
    case Expr::Kind::Mul:
      body = print_node(*n.a, names, 2) + " * " + print_node(*n.b, names, 3);
      break;
    case Expr::Kind::Div:
      body = print_node(*n.a, names, 2) + " / " + print_node(*n.b, names, 3);
      break;
    case Expr::Kind::Pow:
      body = print_node(*n.a, names, 4) + " ^ " + std::to_string(n.exponent);
      break;
    case Expr::Kind::Neg:
      body = "-" + print_node(*n.a, names, 4);
      break;
    case Expr::Kind::Sin:
      body = "sin(" + print_node(*n.a, names, 1) + ")";
      break;
    case Expr::Kind::Cos:
      body = "cos(" + print_node(*n.a, names, 1) + ")";
      break;
    case Expr::Kind::Exp:
      body = "exp(" + print_node(*n.a, names, 1) + ")";
      break;
  }
  if (level < min_level) return "(" + body + ")";
  return body;
}

}  // namespace

std::vector<int> Expr::variables() const {
  std::vector<int> out;
  collect_vars(root_.get(), out);
  return out;
}

std::string Expr::to_string(const std::vector<std::string>& var_names) const {
  if (!root_) return "";
  return print_node(*root_, var_names, 0);
}

bool Expr::structurally_equal(const Expr& other) const {
  return nodes_equal(root_.get(), other.root_.get());
}

double eval_expr(const Expr& e, std::span<const double> valuation) {
  return eval_node(e.node(), valuation, nullptr);
}

}  // namespace hare
