#pragma once

#include <optional>

#include "hare/model.hpp"

namespace hare {

struct SimConfig {
  double step = 1e-3;        // RK4 step size h
  double eps_sim = 1e-6;     // trajectory tube radius (per coordinate)
  double eps_robust = 1e-4;  // robustness margin for guards and invariants
  long max_steps = 20000000;

  void check() const;  // throws std::invalid_argument on bad values
};

struct Sample {
  double time = 0.0;
  std::vector<double> values;
};

struct TrajectorySegment {
  int location = -1;
  double entry_time = 0.0;
  double dwell = 0.0;
  std::vector<Sample> samples;     // strictly increasing times, first at entry
  double error_estimate = 0.0;     // accumulated per-coordinate bound
};

struct JumpRecord {
  double time = 0.0;
  int transition = -1;
  std::vector<double> pre;
  std::vector<double> post;  // pre with resets applied
};

struct Trajectory {
  std::vector<TrajectorySegment> segments;
  std::vector<JumpRecord> jumps;

  double end_time() const;
  // Interpolated valuation at time t (pre-jump side at segment boundaries);
  // nullopt outside the recorded domain.
  std::optional<std::vector<double>> value_at(double t) const;
};

enum class ViolationKind { InitialState, Guard, Invariant, Tube, Evaluation };

struct SimViolation {
  ViolationKind kind = ViolationKind::Guard;
  double time = 0.0;
  int segment = -1;
  int location = -1;
  int transition = -1;
  std::optional<LinearConstraint> constraint;
  std::string detail;
};

struct SimResult {
  Trajectory trajectory;
  std::vector<SimViolation> violations;  // in trajectory order

  bool ok() const { return violations.empty(); }
};

// Deterministic per-variable dynamics for one dwell period: an ODE right-hand
// side or a fixed slope (used for rate-interval flows, where the caller picks
// the witness slope).
using StepDynamics = std::vector<std::variant<Expr, double>>;

// Classical fixed-step RK4 over [0, duration], the final partial step
// shortened to land exactly on the duration. Each step is also taken as two
// half steps; the Richardson difference accumulates into error_estimate and
// the run fails when it exceeds cfg.eps_sim. Throws SimError ("tube
// violation", suggesting a smaller step) or EvalError.
TrajectorySegment integrate_location(const StepDynamics& dynamics,
                                     std::span<const double> x0, double duration,
                                     const SimConfig& cfg);

// Hybrid execution of a concrete path: integrate each location for its
// duration, check the outgoing guard at each jump instant, apply resets and
// leave other variables continuous, check the invariant at every sample.
// Guard/invariant/tube problems come back as violations in the result;
// structural misuse (wrong duration count, nondeterministic rates without a
// witness, unknown path) throws.
SimResult simulate_hybrid_path(const HybridAutomaton& h, const Path& path,
                               std::span<const double> x0,
                               std::span<const double> durations, const SimConfig& cfg,
                               bool stop_on_violation = true);

// Guided simulation of a concretized trace: initial point and dwell times are
// taken from the trace; rate-interval flows follow the trace's own witness
// slope. Violations are data (they drive refinement), so the run continues
// past them where the state stays finite.
SimResult guided_simulate(const HybridAutomaton& h, const Trace& tr_c,
                          const SimConfig& cfg);

// Half-space geometry closed form of "c holds at every point within distance
// eps": the constraint value keeps at least eps * ||c||_2 of slack on every
// finite bound.
bool robust_satisfies(const LinearConstraint& c, std::span<const double> valuation,
                      double eps);

struct RobustnessIssue {
  int transition = -1;
  LinearConstraint constraint;
  double width = 0.0;                 // satisfying width along the constraint normal
  std::optional<Interval> suggested;  // floor/ceil widening for equality guards
};

struct RobustnessReport {
  std::string method;
  std::vector<RobustnessIssue> flagged;

  bool ok() const { return flagged.empty(); }
};

// Flags guard constraints whose satisfying set within the source location's
// box is thinner than eps along the constraint normal; equality guards get a
// suggested widening floor(c/eps)*eps < x < ceil(c/eps)*eps.
RobustnessReport check_structural_robustness(const HybridAutomaton& h, double eps);

struct ValidationResult {
  bool validated = false;
  std::optional<SimViolation> first_failure;
  Trajectory trajectory;
  RobustnessReport robustness;  // non-empty flags are a warning, not a failure
};

// Theorem-style counterexample check: guided simulation must pass every jump
// guard and every invariant sample eps_robust-robustly with the integration
// tube within eps_sim.
ValidationResult validate_counterexample(const HybridAutomaton& h, const Trace& tr_c,
                                         const SimConfig& cfg);

// CSV rows `time,var...,location`, one per sample.
std::string trajectory_csv(const Trajectory& traj, const HybridAutomaton& h);

}  // namespace hare
