#pragma once

#include <optional>

#include "hare/abstraction.hpp"
#include "hare/simulate.hpp"

namespace hare {

enum class MetricKind { Euclidean, Manhattan };

struct Metric {
  MetricKind kind = MetricKind::Euclidean;
};

double point_distance(std::span<const double> a, std::span<const double> b,
                      const Metric& m);

enum class StrategyKind { AbsDistance, DiffOfRates, RatioOfRates };

struct Strategy {
  StrategyKind kind = StrategyKind::AbsDistance;
  double threshold = 0.1;  // finite, positive
};

// Trace valuation at time t: exact entry/exit values at checkpoints, linear
// interpolation inside a step. Throws std::out_of_range outside [0, total].
std::vector<double> trace_value_at(const Trace& tr, double t);

// Distance between the trajectory and the trace at time t under metric m.
// Both sides use the pre-jump value at step boundaries.
double distance_D(const Trajectory& traj, const Trace& tr_c, double t, const Metric& m);

// Checkpoints are the LP trace's cumulative times: index 0 is the entry of
// the first step, index i >= 1 the exit of step i. Count is limited by how
// far the trajectory actually got.
int checkpoint_count(const Trajectory& traj, const Trace& tr_c);
double checkpoint_time(const Trace& tr_c, int checkpoint);
double checkpoint_distance(const Trajectory& traj, const Trace& tr_c, int checkpoint,
                           const Metric& m);

// D(t_i) - D(t_{i-1}); requires checkpoint >= 1.
double distance_rate_Dprime(const Trajectory& traj, const Trace& tr_c, int checkpoint,
                            const Metric& m);

struct RefinementChoice {
  int location = -1;   // concrete location of the trace step at the checkpoint
  int checkpoint = 0;  // smallest checkpoint whose statistic exceeds the threshold
  double statistic = 0.0;
  double distance = 0.0;  // D at that checkpoint, for logging
};

// Smallest checkpoint index whose strategy statistic exceeds the threshold;
// nullopt when divergence stays below it everywhere (ratio checkpoints with a
// zero denominator are skipped).
std::optional<RefinementChoice> choose_refinement_location(const Trajectory& traj,
                                                           const Trace& tr_c,
                                                           const Strategy& strategy,
                                                           const Metric& m);

// Axis-aligned split hyperplane x_k <= mid(box_k) for the variable with the
// largest |trajectory - trace| contribution at the checkpoint (ties: lowest
// index; variables with a degenerate box extent are skipped). Throws
// AbstractionError("cannot split ...") when no contributing variable has a
// splittable extent.
LinearConstraint choose_split_constraint(const Abstraction& a, int leaf_location,
                                         const Trajectory& traj, const Trace& tr_c,
                                         int checkpoint, const Metric& m);

// Applies the split; the two children are the only locations whose rate
// intervals get recomputed.
Abstraction refine(const Abstraction& a, int leaf_location, const LinearConstraint& c);

}  // namespace hare
