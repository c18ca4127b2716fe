#include <random>

#include "doctest.h"

#include "hare/abstraction.hpp"
#include "hare/errors.hpp"
#include "hare/feasibility.hpp"
#include "helpers.hpp"
#include "split_soundness.hpp"

using namespace hare;
using hare_test::between;
using hare_test::ge;
using hare_test::le;

namespace {

Box box1(double lo, double hi) { return Box{Interval(lo, hi)}; }

// Samples a random point of the box and checks containment of the evaluation.
void check_soundness(const Expr& e, const Box& box, std::mt19937& rng, int samples) {
  Interval enclosure;
  try {
    enclosure = eval_interval(e, box);
  } catch (const AbstractionError&) {
    return;  // divisor straddles zero; nothing to check
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> point(box.size());
  for (int s = 0; s < samples; ++s) {
    for (size_t k = 0; k < box.size(); ++k)
      point[k] = box[k].lo + unit(rng) * box[k].width();
    double value;
    try {
      value = eval_expr(e, point);
    } catch (const EvalError&) {
      continue;
    }
    CHECK(enclosure.contains(value));
  }
}

}  // namespace

TEST_CASE("interval evaluation of simple expressions") {
  const Interval neg = eval_interval(Expr::neg(Expr::variable(0)), box1(1.0, 2.0));
  CHECK(neg.lo == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(neg.hi == doctest::Approx(-1.0).epsilon(1e-12));

  Box xy{Interval(0.0, 1.0), Interval(-1.0, 1.0)};
  const Interval prod =
      eval_interval(Expr::mul(Expr::variable(0), Expr::variable(1)), xy);
  CHECK(prod.lo == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(prod.hi == doctest::Approx(1.0).epsilon(1e-12));

  const Interval constant = eval_interval(Expr::constant(3.0), box1(-5.0, 5.0));
  CHECK(constant.lo == 3.0);
  CHECK(constant.hi == 3.0);
}

TEST_CASE("interval evaluation is sound on random expressions") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> edge(-4.0, 4.0);
  for (int i = 0; i < 150; ++i) {
    const Expr e = hare_test::random_expr(rng, 2, 3);
    Box box(2);
    for (auto& iv : box) {
      const double a = edge(rng), b = edge(rng);
      iv = Interval(std::min(a, b), std::max(a, b));
    }
    check_soundness(e, box, rng, 25);
  }
}

TEST_CASE("location boxes come from invariant bounds clipped to ranges") {
  HybridAutomaton h;
  h.vars = {{"x", Interval(-10.0, 10.0)}};
  Location loc;
  loc.name = "q";
  loc.invariant = {le(0, 3.0), ge(0, 1.0)};
  loc.flows.push_back(Interval(0.0, 0.0));
  Box box = location_box(h, loc);
  CHECK(box[0].lo == doctest::Approx(1.0));
  CHECK(box[0].hi == doctest::Approx(3.0));

  loc.invariant.clear();
  box = location_box(h, loc);
  CHECK(box[0].lo == doctest::Approx(-10.0));
  CHECK(box[0].hi == doctest::Approx(10.0));

  loc.invariant = {le(0, 0.0), ge(0, 1.0)};
  CHECK_THROWS_WITH_AS(location_box(h, loc), doctest::Contains("unsatisfiable invariant"),
                       AbstractionError);
}

TEST_CASE("coupled invariants project onto vertex-exact boxes") {
  HybridAutomaton h;
  h.vars = {{"x", Interval(0.0, 10.0)}, {"y", Interval(0.0, 10.0)}};
  Location loc;
  loc.name = "q";
  LinearConstraint sum;  // x + y <= 2
  sum.coeffs = {{0, 1.0}, {1, 1.0}};
  sum.upper = 2.0;
  loc.invariant = {sum};
  loc.flows = {Flow{Interval(0.0, 0.0)}, Flow{Interval(0.0, 0.0)}};
  const Box box = location_box(h, loc);
  // Feasible vertices (0,0), (2,0), (0,2): both coordinates span [0, 2].
  CHECK(box[0].lo == doctest::Approx(0.0));
  CHECK(box[0].hi == doctest::Approx(2.0));
  CHECK(box[1].lo == doctest::Approx(0.0));
  CHECK(box[1].hi == doctest::Approx(2.0));
}

TEST_CASE("abstract flows over a box") {
  // dx = 5 - 0.1 * x over [18, 22] -> [2.8, 3.2]
  Location loc;
  loc.name = "on";
  loc.flows.push_back(Expr::sub(Expr::constant(5.0),
                                Expr::mul(Expr::constant(0.1), Expr::variable(0))));
  const auto rates = abstract_flows(loc, box1(18.0, 22.0));
  CHECK(rates[0].lo == doctest::Approx(2.8).epsilon(1e-12));
  CHECK(rates[0].hi == doctest::Approx(3.2).epsilon(1e-12));

  Location still;
  still.name = "still";
  still.flows.push_back(Expr::constant(0.0));
  const auto zero = abstract_flows(still, box1(-5.0, 5.0));
  CHECK(zero[0].lo == 0.0);
  CHECK(zero[0].hi == 0.0);
}

TEST_CASE("building the abstraction of an already-linear model changes nothing") {
  auto h = std::make_shared<const HybridAutomaton>(hare_test::load_fixture("tank.ha"));
  const Abstraction a = build_lha(h);
  CHECK(is_linear(a.lha));
  CHECK(a.lha.locations.size() == h->locations.size());
  CHECK(a.lha.transitions.size() == h->transitions.size());
  const int filling = a.lha.location_index("filling");
  const Interval rate = rate_interval(a.lha.locations[static_cast<size_t>(filling)], 0);
  CHECK(rate.lo == 1.0);
  CHECK(rate.hi == 2.0);
  for (const auto& node : a.tree.nodes) {
    CHECK(node.parent == -1);
    CHECK(node.is_leaf());
  }
}

TEST_CASE("the thermostat heater rate tightens with the invariant box") {
  auto result = parse_model(
      "automaton t\n"
      "var x in [-10, 40];\n"
      "init entry;\n"
      "location entry {}\n"
      "location on { invariant: 18 <= x <= 22; flow: dx = 5 - 0.1 * x; }\n"
      "transition entry -> on { reset: x := 20; }\n");
  auto h = std::make_shared<const HybridAutomaton>(std::get<HybridAutomaton>(result));
  const Abstraction a = build_lha(h);
  const int on = a.lha.location_index("on");
  const Interval rate = rate_interval(a.lha.locations[static_cast<size_t>(on)], 0);
  CHECK(rate.lo == doctest::Approx(2.8).epsilon(1e-9));
  CHECK(rate.hi == doctest::Approx(3.2).epsilon(1e-9));
}

namespace {

// entry --{x := 2}--> mid (dx = -x, invariant 1 <= x <= 4) --> out
std::shared_ptr<const HybridAutomaton> decay_model() {
  auto result = parse_model(
      "automaton decay\n"
      "var x in [-10, 10];\n"
      "init entry;\n"
      "location entry {}\n"
      "location mid { invariant: 1 <= x <= 4; flow: dx = -x; }\n"
      "location out { flow: dx in [0, 0]; }\n"
      "transition entry -> mid { reset: x := 2; }\n"
      "transition mid -> out { guard: x >= 1; }\n");
  return std::make_shared<const HybridAutomaton>(std::get<HybridAutomaton>(result));
}

}  // namespace

TEST_CASE("split duplicates edges, adds bridges, and tightens child rates") {
  const Abstraction a = build_lha(decay_model());
  const int mid = a.lha.location_index("mid");
  const size_t edges_before = a.lha.transitions.size();  // 2: one in, one out

  const Abstraction b = split(a, mid, le(0, 2.0));
  // |In| + |Out| + 2 bridges on top of the original count.
  CHECK(b.lha.transitions.size() == edges_before + 1 + 1 + 2);
  CHECK(b.lha.locations.size() == a.lha.locations.size() + 1);

  const int lo_child = b.lha.location_index("mid_a");
  const int hi_child = b.lha.location_index("mid_b");
  REQUIRE(lo_child >= 0);
  REQUIRE(hi_child >= 0);
  CHECK(b.boxes[static_cast<size_t>(lo_child)][0].lo == doctest::Approx(1.0));
  CHECK(b.boxes[static_cast<size_t>(lo_child)][0].hi == doctest::Approx(2.0));
  CHECK(b.boxes[static_cast<size_t>(hi_child)][0].lo == doctest::Approx(2.0));
  CHECK(b.boxes[static_cast<size_t>(hi_child)][0].hi == doctest::Approx(4.0));

  // dx = -x: child rates [-2,-1] and [-4,-2].
  const Interval lo_rate = rate_interval(b.lha.locations[static_cast<size_t>(lo_child)], 0);
  CHECK(lo_rate.lo == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(lo_rate.hi == doctest::Approx(-1.0).epsilon(1e-12));
  const Interval hi_rate = rate_interval(b.lha.locations[static_cast<size_t>(hi_child)], 0);
  CHECK(hi_rate.lo == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(hi_rate.hi == doctest::Approx(-2.0).epsilon(1e-12));

  // Bridges carry the split constraint and its closed complement, no resets.
  int bridges = 0;
  for (size_t ti = 0; ti < b.lha.transitions.size(); ++ti) {
    if (b.origin_transition[ti] >= 0) continue;
    ++bridges;
    const Transition& t = b.lha.transitions[ti];
    CHECK(t.resets.empty());
    REQUIRE(t.guard.size() == 1);
    if (t.source == lo_child) {
      CHECK(t.target == hi_child);
      CHECK(t.guard[0].upper == doctest::Approx(2.0));
    } else {
      CHECK(t.source == hi_child);
      CHECK(t.target == lo_child);
      CHECK(t.guard[0].lower == doctest::Approx(2.0));
    }
  }
  CHECK(bridges == 2);
}

TEST_CASE("non-separating split constraints are rejected") {
  const Abstraction a = build_lha(decay_model());
  const int mid = a.lha.location_index("mid");
  CHECK_THROWS_AS(split(a, mid, le(0, 100.0)), AbstractionError);
  CHECK_THROWS_AS(split(a, mid, le(0, 1.0)), AbstractionError);  // boundary touch
}

TEST_CASE("concretization is the identity before any split") {
  const Abstraction a = build_lha(decay_model());
  Path p;
  p.transitions = {0, 1};
  CHECK(concretize_path(a, p).transitions == p.transitions);
}

TEST_CASE("concretization collapses bridge crossings") {
  const Abstraction a = build_lha(decay_model());
  const int mid = a.lha.location_index("mid");
  const Abstraction b = split(a, mid, le(0, 2.0));
  const int hi_child = b.lha.location_index("mid_b");
  const int lo_child = b.lha.location_index("mid_a");

  int entry_to_hi = -1, bridge_down = -1, lo_to_out = -1;
  for (size_t ti = 0; ti < b.lha.transitions.size(); ++ti) {
    const Transition& t = b.lha.transitions[ti];
    if (b.origin_transition[ti] == 0 && t.target == hi_child)
      entry_to_hi = static_cast<int>(ti);
    if (b.origin_transition[ti] < 0 && t.source == hi_child)
      bridge_down = static_cast<int>(ti);
    if (b.origin_transition[ti] == 1 && t.source == lo_child)
      lo_to_out = static_cast<int>(ti);
  }
  REQUIRE(entry_to_hi >= 0);
  REQUIRE(bridge_down >= 0);
  REQUIRE(lo_to_out >= 0);

  Path p;
  p.transitions = {entry_to_hi, bridge_down, lo_to_out};
  const Path concrete = concretize_path(b, p);
  CHECK(concrete.transitions == std::vector<int>{0, 1});

  // Trace concretization: dwell adds up, entry from the first merged step,
  // exit from the last.
  Trace tr;
  tr.steps.push_back({hi_child, entry_to_hi, 1.0, {3.0}, {2.0}});
  tr.steps.push_back({lo_child, bridge_down, 2.0, {2.0}, {1.0}});
  tr.steps.push_back({b.lha.location_index("out"), lo_to_out, 0.0, {1.0}, {1.0}});
  const ConcretizedTrace ct = concretize_trace_mapped(b, tr);
  REQUIRE(ct.trace.steps.size() == 2);
  CHECK(ct.trace.steps[0].location == decay_model()->location_index("mid"));
  CHECK(ct.trace.steps[0].dwell == doctest::Approx(3.0));
  CHECK(ct.trace.steps[0].entry[0] == doctest::Approx(3.0));
  CHECK(ct.trace.steps[0].exit[0] == doctest::Approx(1.0));
  REQUIRE(ct.abstract_locations.size() == 2);
  CHECK(ct.abstract_locations[0] == std::vector<int>{hi_child, lo_child});
}

TEST_CASE("two generations of splits concretize to the original root") {
  Abstraction a = build_lha(decay_model());
  a = split(a, a.lha.location_index("mid"), le(0, 2.0));
  a = split(a, a.lha.location_index("mid_b"), le(0, 3.0));
  for (size_t li = 0; li < a.lha.locations.size(); ++li) {
    const std::string& name = a.lha.locations[li].name;
    if (name.rfind("mid", 0) == 0)
      CHECK(a.concrete_root(static_cast<int>(li)) == decay_model()->location_index("mid"));
  }
  // Leaves of the tree are exactly the current abstract locations.
  int leaves = 0;
  for (const auto& node : a.tree.nodes)
    if (node.is_leaf()) ++leaves;
  CHECK(leaves == static_cast<int>(a.lha.locations.size()));
  for (size_t li = 0; li < a.lha.locations.size(); ++li)
    CHECK(a.tree.nodes[static_cast<size_t>(a.uid_of[li])].is_leaf());
}

TEST_CASE("child rate intervals refine monotonically") {
  std::mt19937 rng(41);
  for (int i = 0; i < 15; ++i) {
    const HybridAutomaton h = hare_test::random_linear_automaton(rng);
    if (!validate_automaton(h).ok()) continue;
    Abstraction a;
    try {
      a = build_lha(std::make_shared<const HybridAutomaton>(h));
    } catch (const AbstractionError&) {
      continue;
    }
    for (size_t li = 0; li < a.lha.locations.size(); ++li) {
      if (a.lha.locations[li].is_initial) continue;
      if (a.boxes[li][0].width() < 1.0) continue;
      const Interval parent_rate = rate_interval(a.lha.locations[li], 0);
      Abstraction b;
      try {
        b = split(a, static_cast<int>(li), le(0, a.boxes[li][0].mid()));
      } catch (const AbstractionError&) {
        continue;
      }
      for (const char* suffix : {"_a", "_b"}) {
        const int child = b.lha.location_index(a.lha.locations[li].name + suffix);
        REQUIRE(child >= 0);
        const Interval child_rate =
            rate_interval(b.lha.locations[static_cast<size_t>(child)], 0);
        CHECK(parent_rate.lo <= child_rate.lo + 1e-12);
        CHECK(child_rate.hi <= parent_rate.hi + 1e-12);
      }
      break;
    }
  }
}

TEST_CASE("splits preserve feasible paths up to concretization") {
  std::mt19937 rng(43);
  int exercised_total = 0;
  int instances = 0;
  while (instances < 6) {
    const HybridAutomaton h = hare_test::random_linear_automaton(rng);
    if (!validate_automaton(h).ok()) continue;
    Abstraction a;
    try {
      a = build_lha(std::make_shared<const HybridAutomaton>(h));
    } catch (const AbstractionError&) {
      continue;
    }
    int target = -1;
    for (size_t li = 0; li < a.lha.locations.size(); ++li) {
      if (a.lha.locations[li].is_initial) continue;
      if (a.boxes[li][0].width() > 0.5) {
        target = static_cast<int>(li);
        break;
      }
    }
    if (target < 0) continue;
    Abstraction b;
    try {
      b = split(a, target, le(0, a.boxes[static_cast<size_t>(target)][0].mid()));
    } catch (const AbstractionError&) {
      continue;
    }
    const int exercised = hare_test::check_split_preserves_feasibility(a, b, target, 3);
    CHECK(exercised >= 0);  // -1 flags a lost feasible path
    exercised_total += std::max(exercised, 0);
    ++instances;
  }
  CHECK(exercised_total > 0);
}
