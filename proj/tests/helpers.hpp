#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hare/parser.hpp"

namespace hare_test {

inline std::string read_fixture(const std::string& name) {
  const std::string path = std::string(HARE_FIXTURES_DIR) + "/" + name;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline hare::HybridAutomaton load_fixture(const std::string& name) {
  auto result = hare::parse_model(read_fixture(name));
  if (auto* err = std::get_if<hare::ParseError>(&result))
    throw std::runtime_error(name + ": " + err->to_string());
  return std::get<hare::HybridAutomaton>(result);
}

// Single-variable constraint helpers for hand-built models.
inline hare::LinearConstraint le(int var, double bound) {
  hare::LinearConstraint c;
  c.coeffs.push_back({var, 1.0});
  c.upper = bound;
  return c;
}

inline hare::LinearConstraint ge(int var, double bound) {
  hare::LinearConstraint c;
  c.coeffs.push_back({var, 1.0});
  c.lower = bound;
  return c;
}

inline hare::LinearConstraint between(int var, double lo, double hi) {
  hare::LinearConstraint c;
  c.coeffs.push_back({var, 1.0});
  c.lower = lo;
  c.upper = hi;
  return c;
}

// Random expression trees over `nvars` variables. Division is restricted to
// nonzero constant divisors so interval evaluation stays total.
inline hare::Expr random_expr(std::mt19937& rng, int nvars, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<int> var(0, nvars - 1);
  switch (pick(rng)) {
    case 0: return hare::Expr::constant(coef(rng));
    case 1: return hare::Expr::variable(var(rng));
    case 2: return hare::Expr::add(random_expr(rng, nvars, depth - 1),
                                   random_expr(rng, nvars, depth - 1));
    case 3: return hare::Expr::sub(random_expr(rng, nvars, depth - 1),
                                   random_expr(rng, nvars, depth - 1));
    case 4: return hare::Expr::mul(random_expr(rng, nvars, depth - 1),
                                   random_expr(rng, nvars, depth - 1));
    case 5: {
      double d = coef(rng);
      if (std::abs(d) < 0.25) d = d < 0 ? -0.25 : 0.25;
      return hare::Expr::div(random_expr(rng, nvars, depth - 1), hare::Expr::constant(d));
    }
    case 6: return hare::Expr::sin(random_expr(rng, nvars, depth - 1));
    case 7: return hare::Expr::cos(random_expr(rng, nvars, depth - 1));
    default: {
      std::uniform_int_distribution<int> exponent(0, 3);
      return hare::Expr::pow(random_expr(rng, nvars, depth - 1), exponent(rng));
    }
  }
}

}  // namespace hare_test
