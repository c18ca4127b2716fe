#include "doctest.h"

#include "hare/feasibility.hpp"
#include "helpers.hpp"

using namespace hare;
using hare_test::ge;
using hare_test::le;

namespace {

// entry --{x := 0}--> ramp (rate [1,1], invariant x <= 3)
//       --{guard x >= 2}--> sink (rate [0,0], no invariant, bad)
HybridAutomaton ramp_model(double guard_lo, double inv_hi) {
  HybridAutomaton h;
  h.name = "ramp";
  h.vars = {{"x", Interval(-100.0, 100.0)}};
  Location entry;
  entry.name = "entry";
  entry.is_initial = true;
  Location ramp;
  ramp.name = "ramp";
  ramp.invariant.push_back(le(0, inv_hi));
  ramp.flows.push_back(Interval(1.0, 1.0));
  Location sink;
  sink.name = "sink";
  sink.is_bad = true;
  sink.flows.push_back(Interval(0.0, 0.0));
  h.locations = {entry, ramp, sink};
  h.initial = 0;
  Transition start;
  start.source = 0;
  start.target = 1;
  start.resets.push_back({0, 0.0});
  Transition fire;
  fire.source = 1;
  fire.target = 2;
  fire.guard.push_back(ge(0, guard_lo));
  h.transitions = {start, fire};
  return h;
}

}  // namespace

TEST_CASE("one-step encoding solves to the minimal-time witness") {
  const HybridAutomaton h = ramp_model(2.0, 3.0);
  Path p;
  p.transitions = {0, 1};
  const FeasibilityResult res = check_path_feasible(h, p);
  REQUIRE(res.feasible);
  REQUIRE(res.trace->steps.size() == 2);
  const TraceStep& ramp = res.trace->steps[0];
  CHECK(ramp.location == 1);
  CHECK(ramp.dwell == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(ramp.entry[0] == doctest::Approx(0.0));
  CHECK(ramp.exit[0] == doctest::Approx(2.0));
  const TraceStep& sink = res.trace->steps[1];
  CHECK(sink.dwell == doctest::Approx(0.0));
  CHECK(sink.entry[0] == doctest::Approx(2.0));
}

TEST_CASE("guard against the invariant is infeasible") {
  const HybridAutomaton h = ramp_model(5.0, 3.0);
  Path p;
  p.transitions = {0, 1};
  CHECK(!check_path_feasible(h, p).feasible);
}

TEST_CASE("the zero-length path is trivially feasible") {
  const HybridAutomaton h = ramp_model(2.0, 3.0);
  const FeasibilityResult res = check_path_feasible(h, Path{});
  CHECK(res.feasible);
  CHECK(res.trace->steps.empty());
  CHECK(encode_path(h, Path{}).lp.rows.empty());
}

TEST_CASE("a reset breaks the chaining equality") {
  HybridAutomaton h = ramp_model(2.0, 3.0);
  h.transitions[1].resets.push_back({0, 7.0});
  h.vars[0].range = Interval(-100.0, 100.0);
  Path p;
  p.transitions = {0, 1};
  const FeasibilityResult res = check_path_feasible(h, p);
  REQUIRE(res.feasible);
  CHECK(res.trace->steps[0].exit[0] == doctest::Approx(2.0));
  CHECK(res.trace->steps[1].entry[0] == doctest::Approx(7.0));  // not chained
}

TEST_CASE("feasible traces satisfy every encoded row within tolerance") {
  const HybridAutomaton h = ramp_model(2.0, 3.0);
  Path p;
  p.transitions = {0, 1};
  const PathProgram pp = encode_path(h, p);
  const LpOutcome out = solve_lp(pp.lp);
  REQUIRE(out.status == LpStatus::Feasible);
  for (const auto& row : pp.lp.rows) {
    double s = 0.0;
    for (const auto& [v, c] : row.coeffs) s += c * out.assignment[static_cast<size_t>(v)];
    if (row.lo != -kInf) CHECK(s >= row.lo - 1e-9);
    if (row.hi != kInf) CHECK(s <= row.hi + 1e-9);
  }
}

TEST_CASE("extracting a trace from an infeasible outcome is an error") {
  const HybridAutomaton h = ramp_model(5.0, 3.0);
  Path p;
  p.transitions = {0, 1};
  const PathProgram pp = encode_path(h, p);
  const LpOutcome out = solve_lp(pp.lp);
  REQUIRE(out.status == LpStatus::Infeasible);
  CHECK_THROWS_AS(extract_trace(h, p, pp, out), std::invalid_argument);
}

TEST_CASE("nonexistent paths are rejected") {
  const HybridAutomaton h = ramp_model(2.0, 3.0);
  Path p;
  p.transitions = {1};  // does not start at the initial location
  CHECK_THROWS_AS(encode_path(h, p), std::invalid_argument);
}

TEST_CASE("strict guard bounds are relaxed by the configured slack") {
  HybridAutomaton h = ramp_model(2.0, 3.0);
  h.transitions[1].guard[0].strict_lower = true;
  Path p;
  p.transitions = {0, 1};
  const FeasibilityResult res = check_path_feasible(h, p);
  REQUIRE(res.feasible);
  CHECK(res.trace->steps[0].exit[0] == doctest::Approx(2.0 + 1e-6).epsilon(1e-12));

  EncodeOptions wide;
  wide.strict_slack = 0.5;
  const FeasibilityResult res2 = check_path_feasible(h, p, wide);
  REQUIRE(res2.feasible);
  CHECK(res2.trace->steps[0].exit[0] == doctest::Approx(2.5));
}
