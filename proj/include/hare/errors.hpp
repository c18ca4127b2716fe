#pragma once

#include <stdexcept>
#include <string>

namespace hare {

// Arithmetic failure while evaluating an expression at a point.
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string subterm, const std::string& what)
      : std::runtime_error(what), subterm_(std::move(subterm)) {}
  const std::string& subterm() const { return subterm_; }

 private:
  std::string subterm_;
};

// Failure while building or refining an abstraction (interval division by an
// interval containing zero, unsatisfiable invariant, non-separating split).
class AbstractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown inside the LP solver, distinct from Infeasible.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural misuse of the simulator (wrong duration count, unknown path).
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hare
