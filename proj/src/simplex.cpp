#include "hare/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "hare/errors.hpp"
#include "hare/numfmt.hpp"

namespace hare {

int LinProgram::add_var(std::string name, bool nonneg, LpVarTag tag, int step, int var) {
  vars.push_back({std::move(name), nonneg, tag, step, var});
  return static_cast<int>(vars.size()) - 1;
}

namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kPhase1Tol = 1e-9;
constexpr double kVerifyTol = 1e-8;
constexpr int kPivotLimit = 200000;

struct StdRow {
  std::vector<double> a;  // dense over structural columns
  double b = 0.0;
  enum class Kind { Le, Ge, Eq } kind = Kind::Le;
};

// Dense tableau: rows 0..m-1 constraints, row m objective. Column layout:
// structural | slack/surplus | artificial | rhs.
struct Tableau {
  std::vector<std::vector<double>> t;
  std::vector<int> basis;  // basic column per constraint row
  int m = 0;
  int cols = 0;       // total columns excluding rhs
  int art_begin = 0;  // first artificial column
};

void pivot(Tableau& tab, int row, int col) {
  auto& pr = tab.t[static_cast<size_t>(row)];
  const double inv = 1.0 / pr[static_cast<size_t>(col)];
  for (auto& v : pr) v *= inv;
  pr[static_cast<size_t>(col)] = 1.0;  // cut rounding residue
  for (int i = 0; i <= tab.m; ++i) {
    if (i == row) continue;
    auto& ri = tab.t[static_cast<size_t>(i)];
    const double f = ri[static_cast<size_t>(col)];
    if (f == 0.0) continue;
    for (int j = 0; j <= tab.cols; ++j)
      ri[static_cast<size_t>(j)] -= f * pr[static_cast<size_t>(j)];
    ri[static_cast<size_t>(col)] = 0.0;
  }
  tab.basis[static_cast<size_t>(row)] = col;
}

// Bland: entering = lowest eligible column with negative reduced cost;
// leaving = min ratio, ties broken by lowest basic column index.
bool simplex_iterate(Tableau& tab, const std::vector<bool>& enterable, int& pivots) {
  for (;;) {
    const auto& obj = tab.t[static_cast<size_t>(tab.m)];
    int col = -1;
    for (int j = 0; j < tab.cols; ++j) {
      if (!enterable[static_cast<size_t>(j)]) continue;
      if (obj[static_cast<size_t>(j)] < -kPivotEps) {
        col = j;
        break;
      }
    }
    if (col < 0) return true;  // optimal

    int row = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < tab.m; ++i) {
      const double a = tab.t[static_cast<size_t>(i)][static_cast<size_t>(col)];
      if (a <= kPivotEps) continue;
      const double ratio = tab.t[static_cast<size_t>(i)][static_cast<size_t>(tab.cols)] / a;
      if (row < 0 || ratio < best_ratio - 1e-15 ||
          (std::abs(ratio - best_ratio) <= 1e-15 &&
           tab.basis[static_cast<size_t>(i)] < tab.basis[static_cast<size_t>(row)])) {
        row = i;
        best_ratio = ratio;
      }
    }
    if (row < 0) return false;  // unbounded in this direction

    pivot(tab, row, col);
    if (++pivots > kPivotLimit)
      throw SolverError("simplex pivot limit exceeded (cycling guard)");
  }
}

}  // namespace

LpOutcome solve_lp(const LinProgram& p) {
  const int n = static_cast<int>(p.vars.size());

  // Structural columns: one per nonnegative variable, a +/- pair otherwise.
  std::vector<int> col_pos(static_cast<size_t>(n)), col_neg(static_cast<size_t>(n), -1);
  int n_std = 0;
  for (int v = 0; v < n; ++v) {
    col_pos[static_cast<size_t>(v)] = n_std++;
    if (!p.vars[static_cast<size_t>(v)].nonneg) col_neg[static_cast<size_t>(v)] = n_std++;
  }

  // Expand ranged rows into one-sided rows, scaled by max |coefficient|.
  std::vector<StdRow> rows;
  for (const auto& r : p.rows) {
    double scale = 0.0;
    for (const auto& [v, c] : r.coeffs) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) {
      if (r.lo > kVerifyTol || r.hi < -kVerifyTol)
        return {LpStatus::Infeasible, {}};
      continue;
    }
    std::vector<double> dense(static_cast<size_t>(n_std), 0.0);
    for (const auto& [v, c] : r.coeffs) {
      dense[static_cast<size_t>(col_pos[static_cast<size_t>(v)])] += c / scale;
      if (col_neg[static_cast<size_t>(v)] >= 0)
        dense[static_cast<size_t>(col_neg[static_cast<size_t>(v)])] -= c / scale;
    }
    if (r.lo != -kInf && r.lo == r.hi) {
      rows.push_back({dense, r.lo / scale, StdRow::Kind::Eq});
      continue;
    }
    if (r.hi != kInf) rows.push_back({dense, r.hi / scale, StdRow::Kind::Le});
    if (r.lo != -kInf) rows.push_back({dense, r.lo / scale, StdRow::Kind::Ge});
  }

  const int m = static_cast<int>(rows.size());
  if (m == 0 && n == 0) return {LpStatus::Feasible, {}};

  // Normalize to b >= 0 and count slack/artificial columns.
  int n_slack = 0, n_art = 0;
  for (auto& r : rows) {
    if (r.kind == StdRow::Kind::Ge) {
      for (auto& a : r.a) a = -a;
      r.b = -r.b;
      r.kind = StdRow::Kind::Le;
    }
    if (r.kind == StdRow::Kind::Le && r.b < 0.0) {
      for (auto& a : r.a) a = -a;
      r.b = -r.b;
      ++n_slack;  // becomes a surplus row; needs artificial too
      ++n_art;
      r.kind = StdRow::Kind::Ge;
    } else if (r.kind == StdRow::Kind::Le) {
      ++n_slack;
    } else {  // Eq
      if (r.b < 0.0) {
        for (auto& a : r.a) a = -a;
        r.b = -r.b;
      }
      ++n_art;
    }
  }

  Tableau tab;
  tab.m = m;
  tab.cols = n_std + n_slack + n_art;
  tab.art_begin = n_std + n_slack;
  tab.t.assign(static_cast<size_t>(m + 1), std::vector<double>(static_cast<size_t>(tab.cols + 1), 0.0));
  tab.basis.assign(static_cast<size_t>(m), -1);

  int slack_at = n_std, art_at = tab.art_begin;
  for (int i = 0; i < m; ++i) {
    auto& ti = tab.t[static_cast<size_t>(i)];
    for (int j = 0; j < n_std; ++j) ti[static_cast<size_t>(j)] = rows[static_cast<size_t>(i)].a[static_cast<size_t>(j)];
    ti[static_cast<size_t>(tab.cols)] = rows[static_cast<size_t>(i)].b;
    switch (rows[static_cast<size_t>(i)].kind) {
      case StdRow::Kind::Le:
        ti[static_cast<size_t>(slack_at)] = 1.0;
        tab.basis[static_cast<size_t>(i)] = slack_at++;
        break;
      case StdRow::Kind::Ge:
        ti[static_cast<size_t>(slack_at)] = -1.0;
        ++slack_at;
        ti[static_cast<size_t>(art_at)] = 1.0;
        tab.basis[static_cast<size_t>(i)] = art_at++;
        break;
      case StdRow::Kind::Eq:
        ti[static_cast<size_t>(art_at)] = 1.0;
        tab.basis[static_cast<size_t>(i)] = art_at++;
        break;
    }
  }

  int pivots = 0;

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    auto& obj = tab.t[static_cast<size_t>(m)];
    for (int j = tab.art_begin; j < tab.cols; ++j) obj[static_cast<size_t>(j)] = 1.0;
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<size_t>(i)] < tab.art_begin) continue;
      for (int j = 0; j <= tab.cols; ++j)
        obj[static_cast<size_t>(j)] -= tab.t[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    std::vector<bool> enterable(static_cast<size_t>(tab.cols), true);
    if (!simplex_iterate(tab, enterable, pivots))
      throw SolverError("phase-1 subproblem unbounded");
    const double art_sum = -tab.t[static_cast<size_t>(m)][static_cast<size_t>(tab.cols)];
    if (art_sum > kPhase1Tol) return {LpStatus::Infeasible, {}};

    // Pivot remaining basic artificials out where a nonzero real column exists.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<size_t>(i)] < tab.art_begin) continue;
      int col = -1;
      for (int j = 0; j < tab.art_begin; ++j) {
        if (std::abs(tab.t[static_cast<size_t>(i)][static_cast<size_t>(j)]) > kPivotEps) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(tab, i, col);
      // else: redundant row; the artificial stays basic at zero.
    }
  }

  // Phase 2: original objective over structural columns.
  {
    auto& obj = tab.t[static_cast<size_t>(m)];
    std::fill(obj.begin(), obj.end(), 0.0);
    if (!p.objective.empty()) {
      for (int v = 0; v < n; ++v) {
        const double c = p.objective[static_cast<size_t>(v)];
        if (c == 0.0) continue;
        obj[static_cast<size_t>(col_pos[static_cast<size_t>(v)])] += c;
        if (col_neg[static_cast<size_t>(v)] >= 0)
          obj[static_cast<size_t>(col_neg[static_cast<size_t>(v)])] -= c;
      }
      for (int i = 0; i < m; ++i) {
        const int b = tab.basis[static_cast<size_t>(i)];
        const double cb = obj[static_cast<size_t>(b)];
        if (cb == 0.0) continue;
        for (int j = 0; j <= tab.cols; ++j)
          obj[static_cast<size_t>(j)] -= cb * tab.t[static_cast<size_t>(i)][static_cast<size_t>(j)];
      }
      std::vector<bool> enterable(static_cast<size_t>(tab.cols), true);
      for (int j = tab.art_begin; j < tab.cols; ++j) enterable[static_cast<size_t>(j)] = false;
      if (!simplex_iterate(tab, enterable, pivots))
        throw SolverError("objective unbounded");
    }
  }

  // Read off the solution.
  std::vector<double> std_vals(static_cast<size_t>(tab.cols), 0.0);
  for (int i = 0; i < m; ++i)
    std_vals[static_cast<size_t>(tab.basis[static_cast<size_t>(i)])] =
        tab.t[static_cast<size_t>(i)][static_cast<size_t>(tab.cols)];
  std::vector<double> assignment(static_cast<size_t>(n), 0.0);
  for (int v = 0; v < n; ++v) {
    double x = std_vals[static_cast<size_t>(col_pos[static_cast<size_t>(v)])];
    if (col_neg[static_cast<size_t>(v)] >= 0)
      x -= std_vals[static_cast<size_t>(col_neg[static_cast<size_t>(v)])];
    assignment[static_cast<size_t>(v)] = x;
  }

  // Numerical sanity on the original rows.
  for (const auto& r : p.rows) {
    double scale = 0.0, s = 0.0;
    for (const auto& [v, c] : r.coeffs) {
      scale = std::max(scale, std::abs(c));
      s += c * assignment[static_cast<size_t>(v)];
    }
    if (scale == 0.0) scale = 1.0;
    if (r.lo != -kInf && s < r.lo - kVerifyTol * scale)
      throw SolverError("feasible solution violates a row beyond tolerance");
    if (r.hi != kInf && s > r.hi + kVerifyTol * scale)
      throw SolverError("feasible solution violates a row beyond tolerance");
  }
  for (int v = 0; v < n; ++v)
    if (p.vars[static_cast<size_t>(v)].nonneg && assignment[static_cast<size_t>(v)] < 0.0)
      assignment[static_cast<size_t>(v)] = 0.0;

  return {LpStatus::Feasible, std::move(assignment)};
}

std::string to_text(const LinProgram& p) {
  std::string out;
  for (const auto& r : p.rows) {
    std::string body;
    bool first = true;
    for (const auto& [v, c] : r.coeffs) {
      if (c == 0.0) continue;
      const std::string name = p.vars[static_cast<size_t>(v)].name;
      if (first) {
        body += (c == 1.0 ? name : (c == -1.0 ? "-" + name : format_double(c) + "*" + name));
        first = false;
      } else {
        body += c < 0.0 ? " - " : " + ";
        const double mag = std::abs(c);
        body += (mag == 1.0 ? name : format_double(mag) + "*" + name);
      }
    }
    if (body.empty()) body = "0";
    if (r.lo == r.hi && r.lo != -kInf) {
      out += body + " == " + format_double(r.lo) + "\n";
    } else if (r.lo != -kInf && r.hi != kInf) {
      out += format_double(r.lo) + " <= " + body + " <= " + format_double(r.hi) + "\n";
    } else if (r.hi != kInf) {
      out += body + " <= " + format_double(r.hi) + "\n";
    } else if (r.lo != -kInf) {
      out += body + " >= " + format_double(r.lo) + "\n";
    } else {
      out += body + " free\n";
    }
  }
  for (const auto& v : p.vars)
    if (v.nonneg) out += v.name + " >= 0\n";
  if (!p.objective.empty()) {
    std::string body;
    bool first = true;
    for (size_t v = 0; v < p.objective.size(); ++v) {
      const double c = p.objective[v];
      if (c == 0.0) continue;
      if (!first) body += c < 0.0 ? " - " : " + ";
      else if (c < 0.0) body += "-";
      const double mag = std::abs(c);
      body += (mag == 1.0 ? p.vars[v].name : format_double(mag) + "*" + p.vars[v].name);
      first = false;
    }
    out += "minimize " + (body.empty() ? "0" : body) + "\n";
  }
  return out;
}

}  // namespace hare
