#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hare/expr.hpp"
#include "hare/interval.hpp"

namespace hare {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Declared model variable. Indices are dense (position in the automaton's
// variable list) and names are unique. Every variable carries a mandatory
// closed range bounding the analyzed state space.
struct Variable {
  std::string name;
  Interval range;
};

// a <= sum(coeffs[i].second * x[coeffs[i].first]) <= b, either side possibly
// infinite, either side possibly strict.
struct LinearConstraint {
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  double lower = -kInf;
  double upper = kInf;
  bool strict_lower = false;
  bool strict_upper = false;

  double value(std::span<const double> valuation) const;
  double coefficient_norm() const;  // Euclidean norm of the coefficient vector
  std::string to_string(const std::vector<std::string>& var_names) const;
};

// Signed distance to the nearest finite bound, in constraint-value units.
// Non-negative iff the constraint holds (strictly positive required when the
// binding side is strict).
double constraint_margin(const LinearConstraint& c, std::span<const double> valuation);

// Plain satisfaction, honoring strict flags exactly.
bool satisfies(const LinearConstraint& c, std::span<const double> valuation);

struct Reset {
  int var = -1;
  double value = 0.0;
};

// Per-location dynamics for one variable: an ODE right-hand side (concrete
// model) or a constant rate interval (linear model).
using Flow = std::variant<Expr, Interval>;

struct Location {
  std::string name;
  std::vector<LinearConstraint> invariant;
  std::vector<Flow> flows;  // indexed by variable; empty for the initial location
  bool is_initial = false;
  bool is_bad = false;
};

struct Transition {
  int source = -1;
  int target = -1;
  std::vector<LinearConstraint> guard;
  std::vector<Reset> resets;
};

struct HybridAutomaton {
  std::string name;
  std::vector<Variable> vars;
  std::vector<Location> locations;
  std::vector<Transition> transitions;
  int initial = -1;

  int var_index(const std::string& var_name) const;
  int location_index(const std::string& location_name) const;
  std::vector<int> bad_locations() const;
  std::vector<std::string> var_names() const;
};

// A path is the sequence of transitions taken from the initial location.
// Consecutive transitions chain target -> source; the first source is the
// initial location. Empty = the initial location alone.
struct Path {
  std::vector<int> transitions;

  size_t steps() const { return transitions.size(); }
};

// One timed step of a trace: the automaton dwells in `location` for `dwell`
// time units, entering with valuation `entry` (post-reset value of the edge
// taken into the location) and leaving with valuation `exit`.
struct TraceStep {
  int location = -1;
  int incoming_transition = -1;
  double dwell = 0.0;
  std::vector<double> entry;
  std::vector<double> exit;
};

struct Trace {
  std::vector<TraceStep> steps;

  double total_time() const;
};

struct Violation {
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// Structural well-formedness: dense unique variables, valid ranges, exactly
// one flow per (non-initial location, variable), bare initial location, no
// transitions into the initial location, resolvable indices everywhere.
ValidationReport validate_automaton(const HybridAutomaton& h);

// True iff every non-initial flow is a rate interval or a constant expression.
bool is_linear(const HybridAutomaton& h);

// Rate interval of `var` in `loc`, valid only when is_linear holds for the
// location's flow (constant expressions are read as degenerate intervals).
Interval rate_interval(const Location& loc, int var);

// True iff every consecutive pair of path transitions chains through the
// automaton's transition relation, starting at the initial location.
bool path_exists(const HybridAutomaton& h, const Path& path);

// Location sequence visited by a path, starting with the initial location.
std::vector<int> path_locations(const HybridAutomaton& h, const Path& path);

}  // namespace hare
