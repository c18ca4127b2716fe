#include "hare/feasibility.hpp"

#include <stdexcept>

#include "hare/errors.hpp"

namespace hare {

namespace {

// A constraint over model variables becomes an LP row over the given columns.
LpRow constraint_row(const LinearConstraint& c, const std::vector<int>& columns,
                     double strict_slack) {
  LpRow row;
  for (const auto& [var, coeff] : c.coeffs)
    row.coeffs.push_back({columns[static_cast<size_t>(var)], coeff});
  row.lo = c.lower;
  row.hi = c.upper;
  if (c.strict_lower && row.lo != -kInf) row.lo += strict_slack;
  if (c.strict_upper && row.hi != kInf) row.hi -= strict_slack;
  return row;
}

}  // namespace

PathProgram encode_path(const HybridAutomaton& lha, const Path& path,
                        const EncodeOptions& opts) {
  if (!path_exists(lha, path))
    throw std::invalid_argument("path does not exist in the automaton");

  const int n = static_cast<int>(path.steps());
  const int m = static_cast<int>(lha.vars.size());
  PathProgram pp;

  if (n == 0) return pp;  // the initial location alone: empty program

  // Unknowns.
  for (int i = 0; i < n; ++i) {
    pp.dwell.push_back(pp.lp.add_var("t" + std::to_string(i + 1), true, LpVarTag::Dwell, i));
    pp.entry.emplace_back();
    pp.exit.emplace_back();
    for (int k = 0; k < m; ++k) {
      pp.entry.back().push_back(
          pp.lp.add_var("l" + std::to_string(i) + "_" + lha.vars[static_cast<size_t>(k)].name,
                        false, LpVarTag::Entry, i, k));
      pp.exit.back().push_back(
          pp.lp.add_var("g" + std::to_string(i + 1) + "_" + lha.vars[static_cast<size_t>(k)].name,
                        false, LpVarTag::Exit, i, k));
    }
  }

  for (int i = 0; i < n; ++i) {
    const Transition& in_edge = lha.transitions[static_cast<size_t>(path.transitions[static_cast<size_t>(i)])];
    const Location& loc = lha.locations[static_cast<size_t>(in_edge.target)];

    // Entry values: reset equalities on the incoming edge; unreset variables
    // chain from the previous exit (declared ranges bound step 0).
    std::vector<bool> reset_here(static_cast<size_t>(m), false);
    for (const auto& r : in_edge.resets) {
      reset_here[static_cast<size_t>(r.var)] = true;
      LpRow row;
      row.coeffs.push_back({pp.entry[static_cast<size_t>(i)][static_cast<size_t>(r.var)], 1.0});
      row.lo = row.hi = r.value;
      pp.lp.rows.push_back(std::move(row));
    }
    for (int k = 0; k < m; ++k) {
      if (reset_here[static_cast<size_t>(k)]) continue;
      if (i == 0) continue;  // bounded by the declared range below
      LpRow row;
      row.coeffs.push_back({pp.entry[static_cast<size_t>(i)][static_cast<size_t>(k)], 1.0});
      row.coeffs.push_back({pp.exit[static_cast<size_t>(i - 1)][static_cast<size_t>(k)], -1.0});
      row.lo = row.hi = 0.0;
      pp.lp.rows.push_back(std::move(row));
    }

    // Flow: a*t <= exit - entry <= b*t per variable.
    for (int k = 0; k < m; ++k) {
      const Interval rate = rate_interval(loc, k);
      LpRow row;
      row.coeffs.push_back({pp.exit[static_cast<size_t>(i)][static_cast<size_t>(k)], 1.0});
      row.coeffs.push_back({pp.entry[static_cast<size_t>(i)][static_cast<size_t>(k)], -1.0});
      if (rate.lo == rate.hi) {
        row.coeffs.push_back({pp.dwell[static_cast<size_t>(i)], -rate.lo});
        row.lo = row.hi = 0.0;
        pp.lp.rows.push_back(std::move(row));
      } else {
        LpRow upper = row;
        upper.coeffs.push_back({pp.dwell[static_cast<size_t>(i)], -rate.hi});
        upper.hi = 0.0;
        pp.lp.rows.push_back(std::move(upper));
        row.coeffs.push_back({pp.dwell[static_cast<size_t>(i)], -rate.lo});
        row.lo = 0.0;
        pp.lp.rows.push_back(std::move(row));
      }
    }

    // Invariant at entry and at exit.
    for (const auto& c : loc.invariant) {
      pp.lp.rows.push_back(constraint_row(c, pp.entry[static_cast<size_t>(i)], opts.strict_slack));
      pp.lp.rows.push_back(constraint_row(c, pp.exit[static_cast<size_t>(i)], opts.strict_slack));
    }

    // Guard of the edge leaving this step, on the exit values.
    if (i + 1 < n) {
      const Transition& out_edge =
          lha.transitions[static_cast<size_t>(path.transitions[static_cast<size_t>(i + 1)])];
      for (const auto& c : out_edge.guard)
        pp.lp.rows.push_back(constraint_row(c, pp.exit[static_cast<size_t>(i)], opts.strict_slack));
    }

    // Declared ranges bound every entry/exit value.
    for (int k = 0; k < m; ++k) {
      const Interval& range = lha.vars[static_cast<size_t>(k)].range;
      LpRow entry_row;
      entry_row.coeffs.push_back({pp.entry[static_cast<size_t>(i)][static_cast<size_t>(k)], 1.0});
      entry_row.lo = range.lo;
      entry_row.hi = range.hi;
      pp.lp.rows.push_back(std::move(entry_row));
      LpRow exit_row;
      exit_row.coeffs.push_back({pp.exit[static_cast<size_t>(i)][static_cast<size_t>(k)], 1.0});
      exit_row.lo = range.lo;
      exit_row.hi = range.hi;
      pp.lp.rows.push_back(std::move(exit_row));
    }
  }

  // Deterministic witness: minimize total dwell time.
  pp.lp.objective.assign(pp.lp.vars.size(), 0.0);
  for (int i = 0; i < n; ++i)
    pp.lp.objective[static_cast<size_t>(pp.dwell[static_cast<size_t>(i)])] = 1.0;

  return pp;
}

Trace extract_trace(const HybridAutomaton& lha, const Path& path,
                    const PathProgram& program, const LpOutcome& outcome) {
  if (outcome.status != LpStatus::Feasible)
    throw std::invalid_argument("cannot extract a trace from an infeasible outcome");
  Trace trace;
  const int m = static_cast<int>(lha.vars.size());
  for (size_t i = 0; i < path.steps(); ++i) {
    const int edge = path.transitions[i];
    TraceStep step;
    step.location = lha.transitions[static_cast<size_t>(edge)].target;
    step.incoming_transition = edge;
    step.dwell = outcome.assignment[static_cast<size_t>(program.dwell[i])];
    for (int k = 0; k < m; ++k) {
      step.entry.push_back(outcome.assignment[static_cast<size_t>(program.entry[i][static_cast<size_t>(k)])]);
      step.exit.push_back(outcome.assignment[static_cast<size_t>(program.exit[i][static_cast<size_t>(k)])]);
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

FeasibilityResult check_path_feasible(const HybridAutomaton& lha, const Path& path,
                                      const EncodeOptions& opts) {
  PathProgram pp = encode_path(lha, path, opts);
  LpOutcome outcome = solve_lp(pp.lp);
  if (outcome.status != LpStatus::Feasible) return {false, std::nullopt};
  return {true, extract_trace(lha, path, pp, outcome)};
}

}  // namespace hare
