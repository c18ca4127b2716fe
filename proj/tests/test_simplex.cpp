#include <cstring>
#include <random>

#include "doctest.h"

#include "hare/simplex.hpp"

using namespace hare;

namespace {

// lambda0 = 0, gamma - lambda0 = t (unit rate), gamma >= 2, lambda0 <= 3,
// gamma <= 3, t >= 0, minimize t. Hand solution: t in [2, 3], optimum t = 2.
LinProgram one_step_system() {
  LinProgram lp;
  const int t = lp.add_var("t1", true, LpVarTag::Dwell, 0);
  const int lambda = lp.add_var("l0_x", false, LpVarTag::Entry, 0, 0);
  const int gamma = lp.add_var("g1_x", false, LpVarTag::Exit, 0, 0);
  LpRow reset;
  reset.coeffs = {{lambda, 1.0}};
  reset.lo = reset.hi = 0.0;
  lp.rows.push_back(reset);
  LpRow flow;
  flow.coeffs = {{gamma, 1.0}, {lambda, -1.0}, {t, -1.0}};
  flow.lo = flow.hi = 0.0;
  lp.rows.push_back(flow);
  LpRow guard;
  guard.coeffs = {{gamma, 1.0}};
  guard.lo = 2.0;
  lp.rows.push_back(guard);
  LpRow inv_entry;
  inv_entry.coeffs = {{lambda, 1.0}};
  inv_entry.hi = 3.0;
  lp.rows.push_back(inv_entry);
  LpRow inv_exit;
  inv_exit.coeffs = {{gamma, 1.0}};
  inv_exit.hi = 3.0;
  lp.rows.push_back(inv_exit);
  lp.objective = {1.0, 0.0, 0.0};
  return lp;
}

struct GridProgram {
  LinProgram lp;
  double box = 5.0;  // every unknown confined to [-box, box]
};

GridProgram random_program(std::mt19937& rng, int unknowns, double box) {
  GridProgram gp;
  gp.box = box;
  std::uniform_int_distribution<int> coeff(-3, 3);
  std::uniform_int_distribution<int> bound(-8, 8);
  std::uniform_int_distribution<int> nrows(1, 4);
  for (int v = 0; v < unknowns; ++v)
    gp.lp.add_var("v" + std::to_string(v), false);
  for (int v = 0; v < unknowns; ++v) {
    LpRow r;
    r.coeffs = {{v, 1.0}};
    r.lo = -box;
    r.hi = box;
    gp.lp.rows.push_back(r);
  }
  const int m = nrows(rng);
  for (int i = 0; i < m; ++i) {
    LpRow r;
    bool nonzero = false;
    for (int v = 0; v < unknowns; ++v) {
      const int c = coeff(rng);
      if (c != 0) {
        r.coeffs.push_back({v, static_cast<double>(c)});
        nonzero = true;
      }
    }
    if (!nonzero) continue;
    const int b1 = bound(rng), b2 = bound(rng);
    r.lo = std::min(b1, b2);
    r.hi = std::max(b1, b2);
    if (r.lo == r.hi) r.hi = r.lo + 1;  // equality rows defeat a grid oracle
    gp.lp.rows.push_back(r);
  }
  return gp;
}

bool grid_feasible(const GridProgram& gp, double resolution, double offset) {
  const int n = static_cast<int>(gp.lp.vars.size());
  const int steps = static_cast<int>(std::floor((2.0 * gp.box - offset) / resolution));
  std::vector<int> idx(static_cast<size_t>(n), 0);
  std::vector<double> point(static_cast<size_t>(n));
  for (;;) {
    for (int v = 0; v < n; ++v)
      point[static_cast<size_t>(v)] = -gp.box + offset + idx[static_cast<size_t>(v)] * resolution;
    bool ok = true;
    for (const auto& row : gp.lp.rows) {
      double s = 0.0;
      for (const auto& [v, c] : row.coeffs) s += c * point[static_cast<size_t>(v)];
      if (s < row.lo - 1e-12 || s > row.hi + 1e-12) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
    int d = 0;
    while (d < n && ++idx[static_cast<size_t>(d)] > steps) {
      idx[static_cast<size_t>(d)] = 0;
      ++d;
    }
    if (d == n) return false;
  }
}

}  // namespace

TEST_CASE("the one-step system has the hand-solved minimal witness") {
  const LpOutcome out = solve_lp(one_step_system());
  REQUIRE(out.status == LpStatus::Feasible);
  CHECK(out.assignment[0] == doctest::Approx(2.0).epsilon(1e-9));  // t
  CHECK(out.assignment[1] == doctest::Approx(0.0).epsilon(1e-9));  // lambda0
  CHECK(out.assignment[2] == doctest::Approx(2.0).epsilon(1e-9));  // gamma1
}

TEST_CASE("a crossed guard and invariant are infeasible") {
  LinProgram lp = one_step_system();
  lp.rows[2].lo = 5.0;  // guard gamma >= 5 against gamma <= 3
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("the empty program is feasible with an empty assignment") {
  const LpOutcome out = solve_lp(LinProgram{});
  CHECK(out.status == LpStatus::Feasible);
  CHECK(out.assignment.empty());
}

TEST_CASE("identical programs solve to bit-identical assignments") {
  std::mt19937 rng(5);
  for (int i = 0; i < 50; ++i) {
    const GridProgram gp = random_program(rng, 3, 5.0);
    const LpOutcome a = solve_lp(gp.lp);
    const LpOutcome b = solve_lp(gp.lp);
    REQUIRE(a.status == b.status);
    REQUIRE(a.assignment.size() == b.assignment.size());
    if (!a.assignment.empty())
      CHECK(std::memcmp(a.assignment.data(), b.assignment.data(),
                        a.assignment.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("adding a row never turns infeasible into feasible") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> coeff(-3, 3);
  for (int i = 0; i < 100; ++i) {
    GridProgram gp = random_program(rng, 2, 5.0);
    const bool before = solve_lp(gp.lp).status == LpStatus::Feasible;
    LpRow extra;
    extra.coeffs = {{0, static_cast<double>(coeff(rng))}, {1, static_cast<double>(coeff(rng))}};
    extra.hi = coeff(rng);
    gp.lp.rows.push_back(extra);
    const bool after = solve_lp(gp.lp).status == LpStatus::Feasible;
    if (!before) CHECK(!after);
  }
}

TEST_CASE("verdicts match grid-search brute force away from boundaries") {
  std::mt19937 rng(23);
  int kept = 0;
  int generated = 0;
  while (kept < 40 && generated < 400) {
    ++generated;
    const GridProgram gp = random_program(rng, 2, 5.0);
    const bool coarse = grid_feasible(gp, 1e-2, 0.0);
    const bool shifted = grid_feasible(gp, 1e-2, 5e-3);
    if (coarse != shifted) continue;  // boundary-marginal: excluded
    ++kept;
    CHECK(solve_lp(gp.lp).status ==
          (coarse ? LpStatus::Feasible : LpStatus::Infeasible));
  }
  CHECK(kept >= 40);

  // A few three-unknown instances over a narrower box.
  kept = 0;
  generated = 0;
  while (kept < 5 && generated < 100) {
    ++generated;
    const GridProgram gp = random_program(rng, 3, 1.0);
    const bool coarse = grid_feasible(gp, 1e-2, 0.0);
    const bool shifted = grid_feasible(gp, 1e-2, 5e-3);
    if (coarse != shifted) continue;
    ++kept;
    CHECK(solve_lp(gp.lp).status ==
          (coarse ? LpStatus::Feasible : LpStatus::Infeasible));
  }
  CHECK(kept >= 5);
}

TEST_CASE("lp text dump lists one row per line") {
  const std::string text = to_text(one_step_system());
  CHECK(text.find("l0_x == 0") != std::string::npos);
  CHECK(text.find("g1_x - l0_x - t1 == 0") != std::string::npos);
  CHECK(text.find("g1_x >= 2") != std::string::npos);
  CHECK(text.find("minimize t1") != std::string::npos);
}
