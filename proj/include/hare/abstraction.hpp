#pragma once

#include <array>
#include <memory>
#include <optional>

#include "hare/model.hpp"

namespace hare {

// Axis-aligned box over the model variables, indexed by variable index.
using Box = std::vector<Interval>;

// Sound interval enclosure of an expression over a box: the result contains
// eval_expr(e, p) for every point p in the box. Throws AbstractionError when
// a divisor interval contains zero.
Interval eval_interval(const Expr& e, std::span<const Interval> box);

// Per-variable bounding box of a non-initial location: LP-derived bounds of
// each variable subject to the location invariant, intersected with the
// declared ranges. Throws AbstractionError("unsatisfiable invariant ...")
// when the invariant region is empty.
Box location_box(const HybridAutomaton& h, const Location& loc);

// Rate interval per variable: eval_interval of each concrete flow over the
// box; interval flows pass through unchanged.
std::vector<Interval> abstract_flows(const Location& loc, const Box& box);

// Genealogy of abstract locations. Node ids (uids) are stable across splits;
// leaves of the forest are exactly the current abstract locations.
struct LocationTree {
  struct Node {
    int concrete_root = -1;  // concrete location this subtree abstracts
    int parent = -1;
    std::optional<LinearConstraint> created_by;  // split constraint, already
                                                 // oriented for this child
    std::array<int, 2> children{-1, -1};

    bool is_leaf() const { return children[0] < 0; }
  };
  std::vector<Node> nodes;  // uid == index

  int root_of(int uid) const { return nodes.at(static_cast<size_t>(uid)).concrete_root; }
};

// A linear-hybrid-automaton over-approximation of a concrete automaton.
// Immutable value; split() returns a new abstraction sharing the origin.
struct Abstraction {
  std::shared_ptr<const HybridAutomaton> origin;
  HybridAutomaton lha;  // all flows are rate intervals
  LocationTree tree;
  std::vector<int> uid_of;             // lha location index -> tree uid
  std::vector<int> leaf_index;         // uid -> current lha location index, -1 if not a leaf
  std::vector<int> origin_transition;  // lha transition index -> concrete index, -1 for bridges
  std::vector<Box> boxes;              // per lha location; empty for the initial location

  int concrete_root(int lha_location) const {
    return tree.root_of(uid_of.at(static_cast<size_t>(lha_location)));
  }
};

// Initial abstraction: same graph, flows replaced by rate intervals over each
// location's box, singleton location tree.
Abstraction build_lha(std::shared_ptr<const HybridAutomaton> h);

// Replace leaf `lha_location` by two children with invariants extended by C
// and its closed complement; duplicate its edges to both children, add the
// two bridge edges, and recompute only the children's rate intervals.
// C must have exactly one finite bound. Throws AbstractionError when C does
// not separate the location's box.
Abstraction split(const Abstraction& a, int lha_location, const LinearConstraint& c);

// Map an abstract path to the concrete automaton: locations become tree
// roots, bridge crossings collapse.
Path concretize_path(const Abstraction& a, const Path& abstract_path);

// Same for a trace: bridge-adjacent steps merge, dwell times add up, entry
// comes from the first merged step and exit from the last.
Trace concretize_trace(const Abstraction& a, const Trace& abstract_trace);

struct ConcretizedTrace {
  Trace trace;
  // Per concrete step, the abstract lha locations that were merged into it,
  // in path order (a single element when no bridge was crossed).
  std::vector<std::vector<int>> abstract_locations;
};

ConcretizedTrace concretize_trace_mapped(const Abstraction& a, const Trace& abstract_trace);

}  // namespace hare
