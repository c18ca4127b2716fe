#pragma once

#include <optional>

#include "hare/model.hpp"
#include "hare/simplex.hpp"

namespace hare {

struct EncodeOptions {
  // Strict inequalities are relaxed to non-strict ones by this slack before
  // entering the LP.
  double strict_slack = 1e-6;
};

// The linear system deciding feasibility of a path, together with the column
// catalog needed to read a trace back out of a solution.
struct PathProgram {
  LinProgram lp;
  // Column indices per timed step i = 0..n-1 (step i dwells in the target of
  // path transition i): dwell[i] = t_{i+1}; entry[i][k] / exit[i][k] are the
  // lambda/gamma columns of variable k around that step.
  std::vector<int> dwell;
  std::vector<std::vector<int>> entry;
  std::vector<std::vector<int>> exit;
};

// Build the inequality system for a path of the (linear) automaton:
// per timed step, flow bounds a*t <= gamma - lambda <= b*t, invariants at
// entry and exit, the guard of the outgoing edge at exit, reset equalities,
// and declared ranges on every entry/exit value. Objective: minimize total
// dwell time. Throws std::invalid_argument when the path does not exist.
PathProgram encode_path(const HybridAutomaton& lha, const Path& path,
                        const EncodeOptions& opts = {});

// Assemble the trace (v_i, t_i, entry, exit) from a feasible solution.
// Throws std::invalid_argument on an infeasible outcome.
Trace extract_trace(const HybridAutomaton& lha, const Path& path,
                    const PathProgram& program, const LpOutcome& outcome);

struct FeasibilityResult {
  bool feasible = false;
  std::optional<Trace> trace;
};

FeasibilityResult check_path_feasible(const HybridAutomaton& lha, const Path& path,
                                      const EncodeOptions& opts = {});

}  // namespace hare
