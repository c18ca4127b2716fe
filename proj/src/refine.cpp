#include "hare/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hare/errors.hpp"

namespace hare {

double point_distance(std::span<const double> a, std::span<const double> b,
                      const Metric& m) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    acc += m.kind == MetricKind::Euclidean ? d * d : d;
  }
  return m.kind == MetricKind::Euclidean ? std::sqrt(acc) : acc;
}

std::vector<double> trace_value_at(const Trace& tr, double t) {
  if (t < 0.0) throw std::out_of_range("time before the trace domain");
  double start = 0.0;
  for (const auto& step : tr.steps) {
    const double end = start + step.dwell;
    if (t <= end) {
      if (step.dwell <= 0.0) return step.exit;
      const double w = (t - start) / step.dwell;
      std::vector<double> out(step.entry.size());
      for (size_t k = 0; k < out.size(); ++k)
        out[k] = step.entry[k] + w * (step.exit[k] - step.entry[k]);
      return out;
    }
    start = end;
  }
  throw std::out_of_range("time beyond the trace domain");
}

double distance_D(const Trajectory& traj, const Trace& tr_c, double t, const Metric& m) {
  const auto tv = traj.value_at(t);
  if (!tv) throw std::out_of_range("time outside the trajectory domain");
  return point_distance(*tv, trace_value_at(tr_c, t), m);
}

int checkpoint_count(const Trajectory& traj, const Trace& tr_c) {
  const int by_trace = static_cast<int>(tr_c.steps.size()) + 1;
  const int by_traj = static_cast<int>(traj.segments.size()) + 1;
  return std::min(by_trace, by_traj);
}

double checkpoint_time(const Trace& tr_c, int checkpoint) {
  double t = 0.0;
  for (int i = 0; i < checkpoint; ++i) t += tr_c.steps[static_cast<size_t>(i)].dwell;
  return t;
}

namespace {

// Exact checkpoint values: trace entry/exit fields, trajectory boundary
// samples (pre-jump side).
const std::vector<double>& trace_checkpoint(const Trace& tr_c, int checkpoint) {
  if (checkpoint == 0) return tr_c.steps.front().entry;
  return tr_c.steps[static_cast<size_t>(checkpoint - 1)].exit;
}

const std::vector<double>& trajectory_checkpoint(const Trajectory& traj, int checkpoint) {
  if (checkpoint == 0) return traj.segments.front().samples.front().values;
  return traj.segments[static_cast<size_t>(checkpoint - 1)].samples.back().values;
}

}  // namespace

double checkpoint_distance(const Trajectory& traj, const Trace& tr_c, int checkpoint,
                           const Metric& m) {
  return point_distance(trajectory_checkpoint(traj, checkpoint),
                        trace_checkpoint(tr_c, checkpoint), m);
}

double distance_rate_Dprime(const Trajectory& traj, const Trace& tr_c, int checkpoint,
                            const Metric& m) {
  if (checkpoint < 1)
    throw std::invalid_argument("the first checkpoint has no predecessor");
  return checkpoint_distance(traj, tr_c, checkpoint, m) -
         checkpoint_distance(traj, tr_c, checkpoint - 1, m);
}

std::optional<RefinementChoice> choose_refinement_location(const Trajectory& traj,
                                                           const Trace& tr_c,
                                                           const Strategy& strategy,
                                                           const Metric& m) {
  if (!(strategy.threshold > 0.0) || !std::isfinite(strategy.threshold))
    throw std::invalid_argument("refinement threshold must be finite and positive");
  if (tr_c.steps.empty() || traj.segments.empty()) return std::nullopt;

  const int n = checkpoint_count(traj, tr_c);
  const int first = strategy.kind == StrategyKind::AbsDistance ? 1 : 2;
  for (int i = first; i < n; ++i) {
    double stat = 0.0;
    switch (strategy.kind) {
      case StrategyKind::AbsDistance:
        stat = std::abs(checkpoint_distance(traj, tr_c, i, m));
        break;
      case StrategyKind::DiffOfRates:
        stat = std::abs(distance_rate_Dprime(traj, tr_c, i, m) -
                        distance_rate_Dprime(traj, tr_c, i - 1, m));
        break;
      case StrategyKind::RatioOfRates: {
        const double prev = distance_rate_Dprime(traj, tr_c, i - 1, m);
        if (prev == 0.0) continue;  // undefined ratio: skip this checkpoint
        stat = std::abs(distance_rate_Dprime(traj, tr_c, i, m) / prev);
        break;
      }
    }
    if (stat > strategy.threshold) {
      RefinementChoice choice;
      choice.location = tr_c.steps[static_cast<size_t>(i - 1)].location;
      choice.checkpoint = i;
      choice.statistic = stat;
      choice.distance = checkpoint_distance(traj, tr_c, i, m);
      return choice;
    }
  }
  return std::nullopt;
}

LinearConstraint choose_split_constraint(const Abstraction& a, int leaf_location,
                                         const Trajectory& traj, const Trace& tr_c,
                                         int checkpoint, const Metric&) {
  if (checkpoint < 1 || checkpoint >= checkpoint_count(traj, tr_c))
    throw std::invalid_argument("checkpoint out of range");
  const auto& tv = trajectory_checkpoint(traj, checkpoint);
  const auto& cv = trace_checkpoint(tr_c, checkpoint);
  const Box& box = a.boxes.at(static_cast<size_t>(leaf_location));

  // Coordinate-wise contribution to D, largest first, lowest index on ties.
  int best = -1;
  double best_contribution = 0.0;
  constexpr double kMinExtent = 1e-9;
  for (size_t k = 0; k < tv.size(); ++k) {
    const double contribution = std::abs(tv[k] - cv[k]);
    if (contribution <= 0.0) continue;
    if (box[k].width() <= kMinExtent) continue;
    if (contribution > best_contribution) {
      best_contribution = contribution;
      best = static_cast<int>(k);
    }
  }
  if (best < 0)
    throw AbstractionError(
        "cannot split: no diverging variable with a splittable box extent");

  LinearConstraint c;
  c.coeffs.push_back({best, 1.0});
  c.upper = box[static_cast<size_t>(best)].mid();
  return c;
}

Abstraction refine(const Abstraction& a, int leaf_location, const LinearConstraint& c) {
  return split(a, leaf_location, c);
}

}  // namespace hare
