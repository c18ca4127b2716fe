#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>

#include "hare/abstraction.hpp"
#include "hare/feasibility.hpp"
#include "hare/refine.hpp"
#include "hare/simulate.hpp"

namespace hare {

struct CegarConfig {
  int max_iterations = 50;
  int max_path_depth = 12;  // transitions per candidate path
  Strategy strategy;
  Metric metric;
  SimConfig sim;
  EncodeOptions encode;
  bool dump_lp = false;  // write each checked candidate's inequality system to stderr

  void check() const;  // throws std::invalid_argument on non-positive budgets
};

// Feasibility verdicts survive refinement when keyed by the abstract leaf/edge
// identity: a split removes its leaf's id from the automaton, so stale entries
// simply stop matching while everything not touching the split keeps hitting.
class PrefixCache {
 public:
  std::optional<bool> lookup(const std::string& key) const;
  void store(const std::string& key, bool feasible);
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, bool> entries_;
};

std::string path_cache_key(const Abstraction& a, const Path& path);

// Breadth-first enumeration of abstract paths from the initial location to
// any bad location, shortest first, edge-declaration order within a depth.
// Prefixes proven LP-infeasible are pruned without extension.
class PathEnumerator {
 public:
  PathEnumerator(const Abstraction& a, int depth_limit, const EncodeOptions& encode,
                 PrefixCache& cache);

  // Next candidate path ending in a bad location; the candidate itself has
  // not been LP-checked (its proper prefixes have).
  std::optional<Path> next();

  int lp_checks() const { return lp_checks_; }

 private:
  bool prefix_feasible(const Path& p);

  const Abstraction& a_;
  int depth_limit_;
  EncodeOptions encode_;
  PrefixCache& cache_;
  std::deque<Path> queue_;
  std::deque<Path> ready_;
  std::vector<std::vector<int>> outgoing_;  // per location, transition indices in order
  int lp_checks_ = 0;
  bool initial_emitted_ = false;
};

enum class VerdictKind { Safe, Unsafe, Unknown };

struct IterationLog {
  int index = 0;
  int abstract_locations = 0;
  int paths_checked = 0;
  std::optional<std::vector<std::string>> feasible_path;  // abstract location names
  std::optional<std::string> refined_location;
  std::optional<std::string> split_constraint;
  std::optional<double> divergence;  // D at the refined checkpoint
};

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  std::string reason;  // Unknown only: "max_iterations" | "stuck"
  std::vector<IterationLog> iterations;
  std::optional<Trace> trace;            // Unsafe: validated concretized trace
  std::optional<Trajectory> trajectory;  // Unsafe: the validating trajectory
  int depth_bound = 0;
};

// The abstraction-refinement loop: build the LHA over-approximation,
// enumerate candidate counterexamples up to the depth bound, LP-check them,
// validate the first feasible one by guided simulation, and either report it
// or split the diverging location and repeat.
Verdict cegar_check(const HybridAutomaton& h, const CegarConfig& cfg);

// Deterministic JSON rendering of a verdict (field order fixed).
std::string report(const Verdict& v, const HybridAutomaton& h,
                   const std::optional<std::string>& trajectory_csv_path = std::nullopt);

std::string trace_to_json(const Trace& trace, const HybridAutomaton& h);
Trace trace_from_json(const std::string& text, const HybridAutomaton& h);

}  // namespace hare
