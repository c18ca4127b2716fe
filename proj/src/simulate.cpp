#include "hare/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hare/abstraction.hpp"
#include "hare/errors.hpp"
#include "hare/numfmt.hpp"

namespace hare {

void SimConfig::check() const {
  if (!(step > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(eps_sim >= 0.0)) throw std::invalid_argument("eps-sim must be nonnegative");
  if (!(eps_robust >= eps_sim))
    throw std::invalid_argument("eps-robust must be at least eps-sim");
  if (max_steps <= 0) throw std::invalid_argument("max integration steps must be positive");
}

double Trajectory::end_time() const {
  if (segments.empty()) return 0.0;
  const auto& last = segments.back();
  return last.entry_time + last.dwell;
}

std::optional<std::vector<double>> Trajectory::value_at(double t) const {
  for (const auto& seg : segments) {
    if (t < seg.entry_time || t > seg.entry_time + seg.dwell) continue;
    const auto& s = seg.samples;
    if (s.empty()) return std::nullopt;
    if (t <= s.front().time) return s.front().values;
    if (t >= s.back().time) return s.back().values;
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const Sample& a, double v) { return a.time < v; });
    const Sample& hi = *it;
    const Sample& lo = *(it - 1);
    const double span = hi.time - lo.time;
    const double w = span > 0.0 ? (t - lo.time) / span : 0.0;
    std::vector<double> out(lo.values.size());
    for (size_t k = 0; k < out.size(); ++k)
      out[k] = lo.values[k] + w * (hi.values[k] - lo.values[k]);
    return out;
  }
  return std::nullopt;
}

namespace {

void eval_rhs(const StepDynamics& dyn, std::span<const double> x, std::vector<double>& out) {
  for (size_t k = 0; k < dyn.size(); ++k) {
    if (const auto* slope = std::get_if<double>(&dyn[k]))
      out[k] = *slope;
    else
      out[k] = eval_expr(std::get<Expr>(dyn[k]), x);
  }
}

// One classical RK4 step.
void rk4_step(const StepDynamics& dyn, const std::vector<double>& x, double h,
              std::vector<double>& out, std::vector<double>& k1, std::vector<double>& k2,
              std::vector<double>& k3, std::vector<double>& k4, std::vector<double>& tmp) {
  const size_t n = x.size();
  eval_rhs(dyn, x, k1);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  eval_rhs(dyn, tmp, k2);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  eval_rhs(dyn, tmp, k3);
  for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  eval_rhs(dyn, tmp, k4);
  for (size_t i = 0; i < n; ++i)
    out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

struct IntegrationOutcome {
  TrajectorySegment segment;
  std::optional<double> tube_exceeded_at;
  std::optional<std::pair<double, std::string>> eval_failed;  // time, cause
};

IntegrationOutcome integrate_location_impl(const StepDynamics& dyn,
                                           std::span<const double> x0, double duration,
                                           const SimConfig& cfg, long& budget) {
  if (duration < 0.0) throw std::invalid_argument("negative dwell duration");
  const size_t n = x0.size();

  IntegrationOutcome out;
  TrajectorySegment& seg = out.segment;
  seg.dwell = duration;

  std::vector<double> x(x0.begin(), x0.end());
  seg.samples.push_back({0.0, x});

  std::vector<double> full(n), half(n), mid(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
  std::vector<double> err(n, 0.0);

  double t = 0.0;
  while (t < duration) {
    const double h = std::min(cfg.step, duration - t);
    if (--budget < 0) throw SimError("integration step budget exhausted");

    try {
      rk4_step(dyn, x, h, full, k1, k2, k3, k4, tmp);
      rk4_step(dyn, x, 0.5 * h, mid, k1, k2, k3, k4, tmp);
      rk4_step(dyn, mid, 0.5 * h, half, k1, k2, k3, k4, tmp);
    } catch (const EvalError& e) {
      out.eval_failed = {t, e.what()};
      seg.dwell = t;  // the segment ends where the dynamics stopped evaluating
      return out;
    }

    double worst = 0.0;
    bool finite = true;
    for (size_t i = 0; i < n; ++i) {
      err[i] += std::abs(full[i] - half[i]) / 15.0;
      worst = std::max(worst, err[i]);
      if (!std::isfinite(half[i])) finite = false;
    }
    if (!finite) {
      out.eval_failed = {t, "state became non-finite during integration"};
      seg.dwell = t;
      return out;
    }
    x = half;
    t = (duration - t <= cfg.step) ? duration : t + h;
    seg.samples.push_back({t, x});
    seg.error_estimate = worst;
    if (worst > cfg.eps_sim && !out.tube_exceeded_at) out.tube_exceeded_at = t;
  }
  return out;
}

}  // namespace

TrajectorySegment integrate_location(const StepDynamics& dynamics,
                                     std::span<const double> x0, double duration,
                                     const SimConfig& cfg) {
  cfg.check();
  long budget = cfg.max_steps;
  IntegrationOutcome out = integrate_location_impl(dynamics, x0, duration, cfg, budget);
  if (out.eval_failed)
    throw EvalError("", out.eval_failed->second + " at t=" +
                            format_double(out.eval_failed->first));
  if (out.tube_exceeded_at)
    throw SimError("tube violation: step-doubling error estimate exceeded eps-sim at t=" +
                   format_double(*out.tube_exceeded_at) + "; reduce the step size");
  return out.segment;
}

namespace {

// Plain satisfaction with an absolute slack absorbing integration rounding;
// witnesses that sit exactly on a bound replay cleanly. Strictness matters
// only at the robust layer.
constexpr double kSimSlack = 1e-9;

bool sim_satisfies(const LinearConstraint& c, std::span<const double> v) {
  return constraint_margin(c, v) >= -kSimSlack;
}

// Dynamics of one location, with interval rates resolved to witness slopes
// when provided (guided runs) and degenerate intervals read as constants.
StepDynamics location_dynamics(const HybridAutomaton& h, const Location& loc,
                               const std::vector<double>* witness_slopes) {
  StepDynamics dyn;
  for (size_t k = 0; k < loc.flows.size(); ++k) {
    if (const auto* iv = std::get_if<Interval>(&loc.flows[k])) {
      if (iv->lo == iv->hi) {
        dyn.push_back(iv->lo);
      } else if (witness_slopes) {
        dyn.push_back(std::clamp((*witness_slopes)[k], iv->lo, iv->hi));
      } else {
        throw SimError("location '" + loc.name +
                       "' has a nondeterministic rate interval for " + h.vars[k].name +
                       "; simulation needs a point flow or a trace witness");
      }
    } else {
      dyn.push_back(std::get<Expr>(loc.flows[k]));
    }
  }
  return dyn;
}

SimResult run_hybrid(const HybridAutomaton& h, const Path& path, std::span<const double> x0,
                     std::span<const double> durations,
                     const std::vector<std::vector<double>>* witness_slopes,
                     const SimConfig& cfg, bool stop_on_violation) {
  cfg.check();
  if (!path_exists(h, path)) throw SimError("path does not exist in the automaton");
  if (durations.size() != path.steps())
    throw SimError("expected " + std::to_string(path.steps()) + " durations, got " +
                   std::to_string(durations.size()));
  if (x0.size() != h.vars.size())
    throw SimError("initial valuation arity mismatch");

  SimResult result;
  if (path.steps() == 0) return result;

  const std::vector<std::string> names = h.var_names();
  std::vector<double> x(x0.begin(), x0.end());
  double now = 0.0;
  long budget = cfg.max_steps;

  const Location& first =
      h.locations[static_cast<size_t>(h.transitions[static_cast<size_t>(path.transitions[0])].target)];
  for (const auto& c : first.invariant) {
    if (!sim_satisfies(c, x)) {
      result.violations.push_back({ViolationKind::InitialState, 0.0, 0,
                                   h.location_index(first.name), -1, c,
                                   "initial valuation violates " + c.to_string(names)});
      if (stop_on_violation) return result;
    }
  }

  for (size_t i = 0; i < path.steps(); ++i) {
    const Transition& in_edge = h.transitions[static_cast<size_t>(path.transitions[i])];
    const int loc_index = in_edge.target;
    const Location& loc = h.locations[static_cast<size_t>(loc_index)];

    StepDynamics dyn =
        location_dynamics(h, loc, witness_slopes ? &(*witness_slopes)[i] : nullptr);

    IntegrationOutcome seg_out = integrate_location_impl(dyn, x, durations[i], cfg, budget);
    bool truncated = false;
    if (seg_out.eval_failed) {
      result.violations.push_back({ViolationKind::Evaluation,
                                   now + seg_out.eval_failed->first, static_cast<int>(i),
                                   loc_index, -1, std::nullopt,
                                   seg_out.eval_failed->second});
      truncated = true;  // cannot continue without a state
    }

    TrajectorySegment& seg = seg_out.segment;
    seg.location = loc_index;
    seg.entry_time = now;
    for (auto& s : seg.samples) s.time += now;
    if (seg_out.tube_exceeded_at) {
      result.violations.push_back({ViolationKind::Tube, now + *seg_out.tube_exceeded_at,
                                   static_cast<int>(i), loc_index, -1, std::nullopt,
                                   "step-doubling error estimate exceeded eps-sim"});
      if (stop_on_violation) truncated = true;
    }

    // Invariant at every sample.
    bool invariant_broken = false;
    for (const auto& sample : seg.samples) {
      for (const auto& c : loc.invariant) {
        if (sim_satisfies(c, sample.values)) continue;
        result.violations.push_back({ViolationKind::Invariant, sample.time,
                                     static_cast<int>(i), loc_index, -1, c,
                                     "invariant " + c.to_string(names) + " violated in '" +
                                         loc.name + "'"});
        invariant_broken = true;
        break;
      }
      if (invariant_broken && stop_on_violation) break;
    }
    if (invariant_broken && stop_on_violation) truncated = true;

    result.trajectory.segments.push_back(seg);
    if (truncated) return result;

    x = seg.samples.back().values;
    now = seg.samples.back().time;

    // Jump to the next location, if any.
    if (i + 1 < path.steps()) {
      const Transition& out_edge = h.transitions[static_cast<size_t>(path.transitions[i + 1])];
      bool guard_broken = false;
      for (const auto& c : out_edge.guard) {
        if (sim_satisfies(c, x)) continue;
        result.violations.push_back({ViolationKind::Guard, now, static_cast<int>(i),
                                     loc_index, path.transitions[i + 1], c,
                                     "guard " + c.to_string(names) + " violated at the jump"});
        guard_broken = true;
      }
      if (guard_broken && stop_on_violation) return result;

      JumpRecord jump;
      jump.time = now;
      jump.transition = path.transitions[i + 1];
      jump.pre = x;
      for (const auto& r : out_edge.resets) x[static_cast<size_t>(r.var)] = r.value;
      jump.post = x;
      result.trajectory.jumps.push_back(std::move(jump));
    }
  }
  return result;
}

}  // namespace

SimResult simulate_hybrid_path(const HybridAutomaton& h, const Path& path,
                               std::span<const double> x0,
                               std::span<const double> durations, const SimConfig& cfg,
                               bool stop_on_violation) {
  return run_hybrid(h, path, x0, durations, nullptr, cfg, stop_on_violation);
}

SimResult guided_simulate(const HybridAutomaton& h, const Trace& tr_c, const SimConfig& cfg) {
  if (tr_c.steps.empty()) return {};
  Path path;
  std::vector<double> durations;
  std::vector<std::vector<double>> slopes;
  for (const auto& step : tr_c.steps) {
    if (step.incoming_transition < 0 ||
        step.incoming_transition >= static_cast<int>(h.transitions.size()))
      throw SimError("trace references an unknown transition");
    path.transitions.push_back(step.incoming_transition);
    durations.push_back(step.dwell);
    std::vector<double> s(h.vars.size(), 0.0);
    if (step.dwell > 0.0)
      for (size_t k = 0; k < s.size(); ++k)
        s[k] = (step.exit[k] - step.entry[k]) / step.dwell;
    slopes.push_back(std::move(s));
  }
  if (!path_exists(h, path)) throw SimError("trace path does not exist in the automaton");
  return run_hybrid(h, path, tr_c.steps.front().entry, durations, &slopes, cfg,
                    /*stop_on_violation=*/false);
}

bool robust_satisfies(const LinearConstraint& c, std::span<const double> valuation,
                      double eps) {
  if (eps < 0.0) throw std::invalid_argument("eps must be nonnegative");
  const double v = c.value(valuation);
  const double slack = eps * c.coefficient_norm();
  if (c.upper != kInf && (c.strict_upper ? v >= c.upper - slack : v > c.upper - slack))
    return false;
  if (c.lower != -kInf && (c.strict_lower ? v <= c.lower + slack : v < c.lower + slack))
    return false;
  return true;
}

RobustnessReport check_structural_robustness(const HybridAutomaton& h, double eps) {
  RobustnessReport report;
  report.method =
      "satisfying-set width along the constraint normal within the source location box";
  for (size_t ti = 0; ti < h.transitions.size(); ++ti) {
    const Transition& t = h.transitions[ti];
    if (t.guard.empty()) continue;
    const Location& src = h.locations[static_cast<size_t>(t.source)];
    if (src.is_initial) continue;
    Box box;
    try {
      box = location_box(h, src);
    } catch (const AbstractionError&) {
      continue;  // empty source region; the guard is unreachable anyway
    }
    for (const auto& c : t.guard) {
      Interval span(0.0, 0.0);
      for (const auto& [var, coeff] : c.coeffs)
        span = span + Interval(coeff) * box[static_cast<size_t>(var)];
      const double lo = std::max(span.lo, c.lower);
      const double hi = std::min(span.hi, c.upper);
      const double norm = c.coefficient_norm();
      const double width = norm > 0.0 ? std::max(hi - lo, 0.0) / norm : 0.0;
      if (width >= eps) continue;
      RobustnessIssue issue;
      issue.transition = static_cast<int>(ti);
      issue.constraint = c;
      issue.width = width;
      if (c.lower == c.upper && c.lower != -kInf && eps > 0.0) {
        // Sampled-comparison widening for equality guards. When c is an
        // exact multiple of eps the floor lands on c itself; step one grid
        // cell below so the suggestion keeps width eps.
        double k = std::floor(c.lower / eps);
        if (k * eps >= c.lower) k -= 1.0;
        issue.suggested = Interval(k * eps, std::ceil(c.upper / eps) * eps);
      }
      report.flagged.push_back(std::move(issue));
    }
  }
  return report;
}

ValidationResult validate_counterexample(const HybridAutomaton& h, const Trace& tr_c,
                                         const SimConfig& cfg) {
  ValidationResult result;
  result.robustness = check_structural_robustness(h, cfg.eps_robust);

  SimResult sim = guided_simulate(h, tr_c, cfg);
  result.trajectory = std::move(sim.trajectory);

  const std::vector<std::string> names = h.var_names();
  std::vector<SimViolation> failures;

  // Hard simulation problems (initial state, tube, evaluation) first, in
  // recorded order; plain guard/invariant misses are subsumed by the robust
  // scan below.
  for (const auto& v : sim.violations)
    if (v.kind == ViolationKind::InitialState || v.kind == ViolationKind::Tube ||
        v.kind == ViolationKind::Evaluation)
      failures.push_back(v);

  size_t jump_at = 0;
  for (size_t si = 0; si < result.trajectory.segments.size(); ++si) {
    const auto& seg = result.trajectory.segments[si];
    const Location& loc = h.locations[static_cast<size_t>(seg.location)];
    bool invariant_failed = false;
    for (const auto& sample : seg.samples) {
      for (const auto& c : loc.invariant) {
        if (robust_satisfies(c, sample.values, cfg.eps_robust)) continue;
        failures.push_back({ViolationKind::Invariant, sample.time, static_cast<int>(si),
                            seg.location, -1, c,
                            "invariant " + c.to_string(names) +
                                " not robustly satisfied in '" + loc.name + "'"});
        invariant_failed = true;
        break;
      }
      if (invariant_failed) break;  // samples ascend; the first miss is the earliest
    }
    if (jump_at < result.trajectory.jumps.size() &&
        si + 1 < result.trajectory.segments.size()) {
      const JumpRecord& jump = result.trajectory.jumps[jump_at++];
      const Transition& edge = h.transitions[static_cast<size_t>(jump.transition)];
      for (const auto& c : edge.guard) {
        if (robust_satisfies(c, jump.pre, cfg.eps_robust)) continue;
        failures.push_back({ViolationKind::Guard, jump.time, static_cast<int>(si),
                            seg.location, jump.transition, c,
                            "guard " + c.to_string(names) + " not robustly satisfied"});
      }
    }
  }

  std::stable_sort(failures.begin(), failures.end(),
                   [](const SimViolation& a, const SimViolation& b) { return a.time < b.time; });
  if (failures.empty()) {
    result.validated = true;
  } else {
    result.first_failure = failures.front();
  }
  return result;
}

std::string trajectory_csv(const Trajectory& traj, const HybridAutomaton& h) {
  std::string out = "time";
  for (const auto& v : h.vars) out += "," + v.name;
  out += ",location\n";
  for (const auto& seg : traj.segments) {
    const std::string& name = h.locations[static_cast<size_t>(seg.location)].name;
    for (const auto& s : seg.samples) {
      out += format_double(s.time);
      for (double v : s.values) out += "," + format_double(v);
      out += "," + name + "\n";
    }
  }
  return out;
}

}  // namespace hare
