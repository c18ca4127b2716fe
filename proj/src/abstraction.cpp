#include "hare/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hare/errors.hpp"
#include "hare/simplex.hpp"

namespace hare {

namespace {

Interval eval_interval_impl(const Expr::Node& n, std::span<const Interval> box) {
  switch (n.kind) {
    case Expr::Kind::Constant: return Interval(n.value);
    case Expr::Kind::Variable: return box[static_cast<size_t>(n.var)];
    case Expr::Kind::Add: return eval_interval_impl(*n.a, box) + eval_interval_impl(*n.b, box);
    case Expr::Kind::Sub: return eval_interval_impl(*n.a, box) - eval_interval_impl(*n.b, box);
    case Expr::Kind::Mul: return eval_interval_impl(*n.a, box) * eval_interval_impl(*n.b, box);
    case Expr::Kind::Div: return eval_interval_impl(*n.a, box) / eval_interval_impl(*n.b, box);
    case Expr::Kind::Neg: return -eval_interval_impl(*n.a, box);
    case Expr::Kind::Pow: return pow(eval_interval_impl(*n.a, box), n.exponent);
    case Expr::Kind::Sin: return sin(eval_interval_impl(*n.a, box));
    case Expr::Kind::Cos: return cos(eval_interval_impl(*n.a, box));
    case Expr::Kind::Exp: return exp(eval_interval_impl(*n.a, box));
  }
  throw AbstractionError("corrupt expression node");
}

}  // namespace

Interval eval_interval(const Expr& e, std::span<const Interval> box) {
  return eval_interval_impl(e.node(), box);
}

Box location_box(const HybridAutomaton& h, const Location& loc) {
  if (loc.is_initial)
    throw std::invalid_argument("the initial location has no box");
  const int m = static_cast<int>(h.vars.size());

  LinProgram lp;
  for (const auto& v : h.vars) lp.add_var(v.name, false);
  for (int k = 0; k < m; ++k) {
    LpRow row;
    row.coeffs.push_back({k, 1.0});
    row.lo = h.vars[static_cast<size_t>(k)].range.lo;
    row.hi = h.vars[static_cast<size_t>(k)].range.hi;
    lp.rows.push_back(std::move(row));
  }
  for (const auto& c : loc.invariant) {
    LpRow row;
    for (const auto& [var, coeff] : c.coeffs) row.coeffs.push_back({var, coeff});
    row.lo = c.lower;  // boxes use the closure of strict constraints
    row.hi = c.upper;
    lp.rows.push_back(std::move(row));
  }

  Box box(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      lp.objective.assign(lp.vars.size(), 0.0);
      lp.objective[static_cast<size_t>(k)] = dir == 0 ? 1.0 : -1.0;
      LpOutcome out = solve_lp(lp);
      if (out.status != LpStatus::Feasible)
        throw AbstractionError("unsatisfiable invariant in '" + loc.name + "'");
      const double value = out.assignment[static_cast<size_t>(k)];
      if (dir == 0) box[static_cast<size_t>(k)].lo = value;
      else box[static_cast<size_t>(k)].hi = value;
    }
    const Interval& range = h.vars[static_cast<size_t>(k)].range;
    box[static_cast<size_t>(k)] = intersect(box[static_cast<size_t>(k)], range);
    if (!box[static_cast<size_t>(k)].valid())
      throw AbstractionError("unsatisfiable invariant in '" + loc.name + "'");
  }
  return box;
}

std::vector<Interval> abstract_flows(const Location& loc, const Box& box) {
  std::vector<Interval> rates;
  rates.reserve(loc.flows.size());
  for (const auto& f : loc.flows) {
    if (const auto* iv = std::get_if<Interval>(&f)) {
      rates.push_back(*iv);
    } else {
      rates.push_back(eval_interval(std::get<Expr>(f), box));
    }
  }
  return rates;
}

namespace {

Location make_abstract_location(const HybridAutomaton& origin, const Location& shape,
                                int concrete_root, const Box& box) {
  Location out;
  out.name = shape.name;
  out.invariant = shape.invariant;
  out.is_initial = false;
  out.is_bad = shape.is_bad;
  const auto rates = abstract_flows(origin.locations[static_cast<size_t>(concrete_root)], box);
  out.flows.clear();
  for (const auto& r : rates) out.flows.push_back(r);
  return out;
}

}  // namespace

Abstraction build_lha(std::shared_ptr<const HybridAutomaton> h) {
  ValidationReport report = validate_automaton(*h);
  if (!report.ok())
    throw std::invalid_argument("invalid automaton: " + report.summary());

  Abstraction a;
  a.origin = std::move(h);
  a.lha.name = a.origin->name;
  a.lha.vars = a.origin->vars;
  a.lha.initial = a.origin->initial;

  for (size_t li = 0; li < a.origin->locations.size(); ++li) {
    const Location& src = a.origin->locations[li];
    LocationTree::Node node;
    node.concrete_root = static_cast<int>(li);
    a.tree.nodes.push_back(node);
    a.uid_of.push_back(static_cast<int>(li));
    a.leaf_index.push_back(static_cast<int>(li));
    if (src.is_initial) {
      Location init;
      init.name = src.name;
      init.is_initial = true;
      init.is_bad = src.is_bad;
      a.lha.locations.push_back(std::move(init));
      a.boxes.emplace_back();
      continue;
    }
    Box box = location_box(*a.origin, src);
    a.lha.locations.push_back(make_abstract_location(*a.origin, src, static_cast<int>(li), box));
    a.boxes.push_back(std::move(box));
  }

  a.lha.transitions = a.origin->transitions;
  for (size_t ti = 0; ti < a.lha.transitions.size(); ++ti)
    a.origin_transition.push_back(static_cast<int>(ti));
  return a;
}

namespace {

// Closed complement of a one-sided linear constraint:
// expr <= b becomes expr >= b and vice versa.
LinearConstraint negate_constraint(const LinearConstraint& c) {
  LinearConstraint n = c;
  if (c.upper != kInf) {
    n.lower = c.upper;
    n.upper = kInf;
  } else {
    n.upper = c.lower;
    n.lower = -kInf;
  }
  n.strict_lower = n.strict_upper = false;
  return n;
}

}  // namespace

Abstraction split(const Abstraction& a, int lha_location, const LinearConstraint& c) {
  const int nloc = static_cast<int>(a.lha.locations.size());
  if (lha_location < 0 || lha_location >= nloc)
    throw std::invalid_argument("split: unknown location");
  const Location& parent = a.lha.locations[static_cast<size_t>(lha_location)];
  if (parent.is_initial) throw std::invalid_argument("split: cannot split the initial location");
  const bool upper_form = c.upper != kInf;
  if (upper_form == (c.lower != -kInf))
    throw std::invalid_argument("split constraint must have exactly one finite bound");
  for (const auto& [var, coeff] : c.coeffs) {
    (void)coeff;
    if (var < 0 || var >= static_cast<int>(a.lha.vars.size()))
      throw std::invalid_argument("split constraint references an unknown variable");
  }

  // The constraint must cut the interior of the location's box, with real
  // room on both sides, not just outward-rounding slack.
  const Box& box = a.boxes[static_cast<size_t>(lha_location)];
  Interval span(0.0, 0.0);
  for (const auto& [var, coeff] : c.coeffs)
    span = span + Interval(coeff) * box[static_cast<size_t>(var)];
  const double bound = upper_form ? c.upper : c.lower;
  const double sep_tol =
      1e-9 * std::max({1.0, std::abs(span.lo), std::abs(span.hi)});
  if (!(span.lo + sep_tol < bound && bound < span.hi - sep_tol))
    throw AbstractionError("non-separating constraint over the location's box");

  LinearConstraint c_pos = c;
  c_pos.strict_lower = c_pos.strict_upper = false;
  LinearConstraint c_neg = negate_constraint(c_pos);

  Abstraction out;
  out.origin = a.origin;
  out.tree = a.tree;

  const int parent_uid = a.uid_of[static_cast<size_t>(lha_location)];
  const int root = out.tree.root_of(parent_uid);
  const int uid_pos = static_cast<int>(out.tree.nodes.size());
  const int uid_neg = uid_pos + 1;
  {
    LocationTree::Node pos, neg;
    pos.concrete_root = neg.concrete_root = root;
    pos.parent = neg.parent = parent_uid;
    pos.created_by = c_pos;
    neg.created_by = c_neg;
    out.tree.nodes.push_back(pos);
    out.tree.nodes.push_back(neg);
    out.tree.nodes[static_cast<size_t>(parent_uid)].children = {uid_pos, uid_neg};
  }

  // New location list: survivors in order, then the two children.
  out.lha.name = a.lha.name;
  out.lha.vars = a.lha.vars;
  std::vector<int> remap(static_cast<size_t>(nloc), -1);
  for (int li = 0; li < nloc; ++li) {
    if (li == lha_location) continue;
    remap[static_cast<size_t>(li)] = static_cast<int>(out.lha.locations.size());
    out.lha.locations.push_back(a.lha.locations[static_cast<size_t>(li)]);
    out.boxes.push_back(a.boxes[static_cast<size_t>(li)]);
    out.uid_of.push_back(a.uid_of[static_cast<size_t>(li)]);
  }
  out.lha.initial = remap[static_cast<size_t>(a.lha.initial)];

  const int child_pos = static_cast<int>(out.lha.locations.size());
  const int child_neg = child_pos + 1;
  for (int side = 0; side < 2; ++side) {
    Location child;
    child.name = parent.name + (side == 0 ? "_a" : "_b");
    child.invariant = parent.invariant;
    child.invariant.push_back(side == 0 ? c_pos : c_neg);
    child.is_bad = parent.is_bad;
    Box child_box = location_box(out.lha, child);
    const auto rates =
        abstract_flows(a.origin->locations[static_cast<size_t>(root)], child_box);
    for (const auto& r : rates) child.flows.push_back(r);
    out.lha.locations.push_back(std::move(child));
    out.boxes.push_back(std::move(child_box));
    out.uid_of.push_back(side == 0 ? uid_pos : uid_neg);
  }

  out.leaf_index.assign(out.tree.nodes.size(), -1);
  for (size_t li = 0; li < out.uid_of.size(); ++li)
    out.leaf_index[static_cast<size_t>(out.uid_of[li])] = static_cast<int>(li);

  // Rewire transitions: edges touching the split location are duplicated to
  // both children, everything else is copied (Def-3 style edge set).
  for (size_t ti = 0; ti < a.lha.transitions.size(); ++ti) {
    const Transition& t = a.lha.transitions[ti];
    const int origin_id = a.origin_transition[ti];
    const bool from_split = t.source == lha_location;
    const bool into_split = t.target == lha_location;
    auto push = [&](int s, int tgt) {
      Transition nt = t;
      nt.source = s;
      nt.target = tgt;
      out.lha.transitions.push_back(std::move(nt));
      out.origin_transition.push_back(origin_id);
    };
    if (!from_split && !into_split) {
      push(remap[static_cast<size_t>(t.source)], remap[static_cast<size_t>(t.target)]);
    } else if (into_split && !from_split) {
      push(remap[static_cast<size_t>(t.source)], child_pos);
      push(remap[static_cast<size_t>(t.source)], child_neg);
    } else if (from_split && !into_split) {
      push(child_pos, remap[static_cast<size_t>(t.target)]);
      push(child_neg, remap[static_cast<size_t>(t.target)]);
    } else {  // self-loop: all four child pairs
      push(child_pos, child_pos);
      push(child_pos, child_neg);
      push(child_neg, child_pos);
      push(child_neg, child_neg);
    }
  }

  // Bridges: (v', C, {}, v'') and (v'', !C, {}, v').
  Transition bridge_pos;
  bridge_pos.source = child_pos;
  bridge_pos.target = child_neg;
  bridge_pos.guard.push_back(c_pos);
  out.lha.transitions.push_back(std::move(bridge_pos));
  out.origin_transition.push_back(-1);
  Transition bridge_neg;
  bridge_neg.source = child_neg;
  bridge_neg.target = child_pos;
  bridge_neg.guard.push_back(c_neg);
  out.lha.transitions.push_back(std::move(bridge_neg));
  out.origin_transition.push_back(-1);

  return out;
}

Path concretize_path(const Abstraction& a, const Path& abstract_path) {
  Path out;
  for (int ti : abstract_path.transitions) {
    if (ti < 0 || ti >= static_cast<int>(a.lha.transitions.size()))
      throw std::invalid_argument("concretize_path: unknown transition");
    const int origin_id = a.origin_transition[static_cast<size_t>(ti)];
    if (origin_id < 0) continue;  // bridge crossing collapses
    out.transitions.push_back(origin_id);
  }
  return out;
}

ConcretizedTrace concretize_trace_mapped(const Abstraction& a, const Trace& abstract_trace) {
  ConcretizedTrace out;
  for (const auto& step : abstract_trace.steps) {
    if (step.incoming_transition < 0 ||
        step.incoming_transition >= static_cast<int>(a.lha.transitions.size()))
      throw std::invalid_argument("concretize_trace: unknown transition");
    const int origin_id = a.origin_transition[static_cast<size_t>(step.incoming_transition)];
    if (origin_id < 0) {
      // Bridge step: merge into the previous concrete step.
      if (out.trace.steps.empty())
        throw std::invalid_argument("concretize_trace: trace starts with a bridge");
      TraceStep& merged = out.trace.steps.back();
      merged.dwell += step.dwell;
      merged.exit = step.exit;
      out.abstract_locations.back().push_back(step.location);
      continue;
    }
    TraceStep cs = step;
    cs.location = a.concrete_root(step.location);
    cs.incoming_transition = origin_id;
    out.trace.steps.push_back(std::move(cs));
    out.abstract_locations.push_back({step.location});
  }
  return out;
}

Trace concretize_trace(const Abstraction& a, const Trace& abstract_trace) {
  return concretize_trace_mapped(a, abstract_trace).trace;
}

}  // namespace hare
