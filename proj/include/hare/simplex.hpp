#pragma once

#include <string>
#include <vector>

#include "hare/model.hpp"

namespace hare {

// Roles an LP unknown can play in a path encoding.
enum class LpVarTag { Dwell, Entry, Exit, Plain };  // t_i, lambda_i(x_k), gamma_i(x_k)

struct LpVariable {
  std::string name;
  bool nonneg = false;
  LpVarTag tag = LpVarTag::Plain;
  int step = -1;  // i for t_i / lambda_i / gamma_i
  int var = -1;   // model variable index for Entry/Exit
};

// lo <= sum(coeffs) <= hi; either bound may be infinite; lo == hi encodes an
// equality row.
struct LpRow {
  std::vector<std::pair<int, double>> coeffs;
  double lo = -kInf;
  double hi = kInf;
};

struct LinProgram {
  std::vector<LpVariable> vars;
  std::vector<LpRow> rows;
  std::vector<double> objective;  // minimized; empty means pure feasibility

  int add_var(std::string name, bool nonneg, LpVarTag tag = LpVarTag::Plain,
              int step = -1, int var = -1);
};

enum class LpStatus { Feasible, Infeasible };

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> assignment;  // indexed like LinProgram::vars when Feasible
};

// Two-phase dense simplex with Bland's rule. Deterministic: identical
// programs yield bit-identical assignments. Feasible outcomes are optimal
// basic solutions for the program's objective (zero objective: any vertex).
// Throws SolverError on pivot-limit exhaustion or numerical breakdown,
// distinct from an Infeasible verdict.
LpOutcome solve_lp(const LinProgram& p);

// One inequality per line, `lo <= expr <= hi` style, for external cross-checks.
std::string to_text(const LinProgram& p);

}  // namespace hare
