#include "hare/cegar.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

#include "hare/errors.hpp"
#include "hare/numfmt.hpp"

namespace hare {

void CegarConfig::check() const {
  if (max_iterations <= 0) throw std::invalid_argument("max-iterations must be positive");
  if (max_path_depth <= 0) throw std::invalid_argument("max-depth must be positive");
  if (!(strategy.threshold > 0.0))
    throw std::invalid_argument("eps-refine must be positive");
  sim.check();
}

std::optional<bool> PrefixCache::lookup(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void PrefixCache::store(const std::string& key, bool feasible) {
  entries_[key] = feasible;
}

std::string path_cache_key(const Abstraction& a, const Path& path) {
  std::string key;
  for (int ti : path.transitions) {
    const int origin = a.origin_transition[static_cast<size_t>(ti)];
    key += origin < 0 ? "b" : std::to_string(origin);
    key += ">";
    key += std::to_string(
        a.uid_of[static_cast<size_t>(a.lha.transitions[static_cast<size_t>(ti)].target)]);
    key += "|";
  }
  return key;
}

PathEnumerator::PathEnumerator(const Abstraction& a, int depth_limit,
                               const EncodeOptions& encode, PrefixCache& cache)
    : a_(a), depth_limit_(depth_limit), encode_(encode), cache_(cache) {
  outgoing_.resize(a.lha.locations.size());
  for (size_t ti = 0; ti < a.lha.transitions.size(); ++ti)
    outgoing_[static_cast<size_t>(a.lha.transitions[ti].source)].push_back(
        static_cast<int>(ti));
  queue_.push_back(Path{});
}

bool PathEnumerator::prefix_feasible(const Path& p) {
  const std::string key = path_cache_key(a_, p);
  if (auto hit = cache_.lookup(key)) return *hit;
  ++lp_checks_;
  const bool feasible = check_path_feasible(a_.lha, p, encode_).feasible;
  cache_.store(key, feasible);
  return feasible;
}

std::optional<Path> PathEnumerator::next() {
  if (!initial_emitted_) {
    initial_emitted_ = true;
    if (a_.lha.locations[static_cast<size_t>(a_.lha.initial)].is_bad) return Path{};
  }
  for (;;) {
    if (!ready_.empty()) {
      Path p = std::move(ready_.front());
      ready_.pop_front();
      return p;
    }
    if (queue_.empty()) return std::nullopt;
    Path prefix = std::move(queue_.front());
    queue_.pop_front();
    if (static_cast<int>(prefix.steps()) >= depth_limit_) continue;

    const int at = prefix.transitions.empty()
                       ? a_.lha.initial
                       : a_.lha.transitions[static_cast<size_t>(prefix.transitions.back())].target;
    if (a_.lha.locations[static_cast<size_t>(at)].is_bad) continue;  // already a candidate
    for (int ti : outgoing_[static_cast<size_t>(at)]) {
      Path ext = prefix;
      ext.transitions.push_back(ti);
      const int target = a_.lha.transitions[static_cast<size_t>(ti)].target;
      if (a_.lha.locations[static_cast<size_t>(target)].is_bad) {
        ready_.push_back(std::move(ext));  // candidate; caller LP-checks it
        continue;
      }
      if (static_cast<int>(ext.steps()) >= depth_limit_) continue;  // dead end
      if (prefix_feasible(ext)) queue_.push_back(std::move(ext));
    }
  }
}

namespace {

std::vector<std::string> path_location_names(const HybridAutomaton& lha, const Path& p) {
  std::vector<std::string> names;
  for (int li : path_locations(lha, p))
    names.push_back(lha.locations[static_cast<size_t>(li)].name);
  return names;
}

// A failure that holds plainly but misses only the robustness margin cannot
// be refined away: the counterexample is real yet not eps-robust, so further
// splitting would only stretch the same path past the depth bound.
bool failure_is_robustness_only(const SimViolation& failure, const Trajectory& traj) {
  if (failure.kind != ViolationKind::Guard && failure.kind != ViolationKind::Invariant)
    return false;
  if (!failure.constraint) return false;
  if (failure.kind == ViolationKind::Guard) {
    for (const auto& jump : traj.jumps)
      if (jump.transition == failure.transition && jump.time == failure.time)
        return constraint_margin(*failure.constraint, jump.pre) >= -1e-9;
    return false;
  }
  const auto value = traj.value_at(failure.time);
  if (!value) return false;
  return constraint_margin(*failure.constraint, *value) >= -1e-9;
}

// Fallback split when the divergence statistics stay under the threshold but
// validation still refuted: bisect the leaf active at the failure, preferring
// the failed constraint's heaviest variable, then any splittable axis.
std::optional<Abstraction> fallback_refine(const Abstraction& abstraction,
                                           int leaf_location,
                                           const std::optional<LinearConstraint>& failed,
                                           IterationLog& log) {
  const Box& box = abstraction.boxes[static_cast<size_t>(leaf_location)];
  std::vector<int> order;
  if (failed) {
    std::vector<std::pair<double, int>> weighted;
    for (const auto& [var, coeff] : failed->coeffs)
      weighted.push_back({-std::abs(coeff), var});
    std::sort(weighted.begin(), weighted.end());
    for (const auto& [w, var] : weighted) order.push_back(var);
  }
  for (size_t k = 0; k < box.size(); ++k)
    if (std::find(order.begin(), order.end(), static_cast<int>(k)) == order.end())
      order.push_back(static_cast<int>(k));

  for (int var : order) {
    if (box[static_cast<size_t>(var)].width() <= 1e-9) continue;
    LinearConstraint c;
    c.coeffs.push_back({var, 1.0});
    c.upper = box[static_cast<size_t>(var)].mid();
    try {
      Abstraction next = refine(abstraction, leaf_location, c);
      log.refined_location =
          abstraction.lha.locations[static_cast<size_t>(leaf_location)].name;
      log.split_constraint = c.to_string(abstraction.lha.var_names());
      return next;
    } catch (const AbstractionError&) {
      continue;
    }
  }
  return std::nullopt;
}

}  // namespace

Verdict cegar_check(const HybridAutomaton& h, const CegarConfig& cfg) {
  cfg.check();
  ValidationReport model_report = validate_automaton(h);
  if (!model_report.ok())
    throw std::invalid_argument("invalid automaton: " + model_report.summary());

  Verdict verdict;
  verdict.depth_bound = cfg.max_path_depth;

  if (h.bad_locations().empty()) {
    verdict.kind = VerdictKind::Safe;
    return verdict;
  }

  auto origin = std::make_shared<const HybridAutomaton>(h);
  Abstraction abstraction = build_lha(origin);
  PrefixCache cache;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    IterationLog log;
    log.index = iter;
    log.abstract_locations = static_cast<int>(abstraction.lha.locations.size());

    PathEnumerator enumerator(abstraction, cfg.max_path_depth, cfg.encode, cache);
    std::optional<Path> feasible_path;
    std::optional<Trace> feasible_trace;
    while (auto candidate = enumerator.next()) {
      ++log.paths_checked;
      const std::string key = path_cache_key(abstraction, *candidate);
      if (auto hit = cache.lookup(key); hit && !*hit) continue;
      if (cfg.dump_lp) {
        std::fprintf(stderr, "# candidate %s\n%s",
                     key.c_str(),
                     to_text(encode_path(abstraction.lha, *candidate, cfg.encode).lp).c_str());
      }
      FeasibilityResult res = check_path_feasible(abstraction.lha, *candidate, cfg.encode);
      cache.store(key, res.feasible);
      if (res.feasible) {
        feasible_path = *candidate;
        feasible_trace = std::move(res.trace);
        break;  // first feasible candidate in enumeration order
      }
    }

    if (!feasible_path) {
      verdict.kind = VerdictKind::Safe;
      verdict.iterations.push_back(std::move(log));
      return verdict;
    }
    log.feasible_path = path_location_names(abstraction.lha, *feasible_path);

    ConcretizedTrace ctr = concretize_trace_mapped(abstraction, *feasible_trace);
    ValidationResult validation = validate_counterexample(h, ctr.trace, cfg.sim);
    if (validation.validated) {
      verdict.kind = VerdictKind::Unsafe;
      verdict.trace = std::move(ctr.trace);
      verdict.trajectory = std::move(validation.trajectory);
      verdict.iterations.push_back(std::move(log));
      return verdict;
    }

    // Refuted: pick where to split.
    std::optional<Abstraction> refined;
    auto choice = choose_refinement_location(validation.trajectory, ctr.trace,
                                             cfg.strategy, cfg.metric);
    if (choice) {
      const auto& leaves =
          ctr.abstract_locations[static_cast<size_t>(choice->checkpoint - 1)];
      const int leaf = leaves.back();  // the leaf active at the checkpoint
      try {
        LinearConstraint c = choose_split_constraint(
            abstraction, leaf, validation.trajectory, ctr.trace, choice->checkpoint,
            cfg.metric);
        refined = refine(abstraction, leaf, c);
        log.refined_location = abstraction.lha.locations[static_cast<size_t>(leaf)].name;
        log.split_constraint = c.to_string(abstraction.lha.var_names());
        log.divergence = choice->distance;
      } catch (const AbstractionError&) {
        refined = fallback_refine(abstraction, leaf, std::nullopt, log);
        if (refined) log.divergence = choice->distance;
      }
    }
    if (!refined && validation.first_failure) {
      const SimViolation& failure = *validation.first_failure;
      if (!choice && failure_is_robustness_only(failure, validation.trajectory)) {
        // No divergence to chase: the trace is real but lacks the margin.
        verdict.kind = VerdictKind::Unknown;
        verdict.reason = "stuck";
        verdict.iterations.push_back(std::move(log));
        return verdict;
      }
      const int step = std::clamp(failure.segment, 0,
                                  static_cast<int>(ctr.abstract_locations.size()) - 1);
      const int leaf = ctr.abstract_locations[static_cast<size_t>(step)].back();
      refined = fallback_refine(abstraction, leaf, failure.constraint, log);
    }
    if (!refined) {
      verdict.kind = VerdictKind::Unknown;
      verdict.reason = "stuck";
      verdict.iterations.push_back(std::move(log));
      return verdict;
    }

    abstraction = std::move(*refined);
    verdict.iterations.push_back(std::move(log));
  }

  verdict.kind = VerdictKind::Unknown;
  verdict.reason = "max_iterations";
  return verdict;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json valuation_json(std::span<const double> values, const HybridAutomaton& h) {
  ordered_json v = ordered_json::object();
  for (size_t k = 0; k < values.size(); ++k) v[h.vars[k].name] = values[k];
  return v;
}

ordered_json trace_json_object(const Trace& trace, const HybridAutomaton& h) {
  ordered_json steps = ordered_json::array();
  for (const auto& s : trace.steps) {
    ordered_json step;
    step["location"] = h.locations[static_cast<size_t>(s.location)].name;
    step["via"] = s.incoming_transition;
    step["dwell"] = s.dwell;
    step["entry"] = valuation_json(s.entry, h);
    step["exit"] = valuation_json(s.exit, h);
    steps.push_back(std::move(step));
  }
  ordered_json out;
  out["steps"] = std::move(steps);
  return out;
}

}  // namespace

std::string report(const Verdict& v, const HybridAutomaton& h,
                   const std::optional<std::string>& trajectory_csv_path) {
  ordered_json out;
  switch (v.kind) {
    case VerdictKind::Safe: out["verdict"] = "safe"; break;
    case VerdictKind::Unsafe: out["verdict"] = "unsafe"; break;
    case VerdictKind::Unknown: out["verdict"] = "unknown"; break;
  }
  if (v.kind == VerdictKind::Unknown) out["reason"] = v.reason;
  out["depth_bound"] = v.depth_bound;
  ordered_json iterations = ordered_json::array();
  for (const auto& it : v.iterations) {
    ordered_json entry;
    entry["index"] = it.index;
    entry["abstract_locations"] = it.abstract_locations;
    entry["paths_checked"] = it.paths_checked;
    if (it.feasible_path) entry["feasible_path"] = *it.feasible_path;
    if (it.refined_location) entry["refined_location"] = *it.refined_location;
    if (it.split_constraint) entry["split_constraint"] = *it.split_constraint;
    if (it.divergence) entry["divergence"] = *it.divergence;
    iterations.push_back(std::move(entry));
  }
  out["iterations"] = std::move(iterations);
  if (v.trace) out["trace"] = trace_json_object(*v.trace, h);
  if (trajectory_csv_path) out["trajectory_csv_path"] = *trajectory_csv_path;
  return out.dump(2) + "\n";
}

std::string trace_to_json(const Trace& trace, const HybridAutomaton& h) {
  return trace_json_object(trace, h).dump(2) + "\n";
}

Trace trace_from_json(const std::string& text, const HybridAutomaton& h) {
  ordered_json j = ordered_json::parse(text);  // may throw nlohmann parse_error
  Trace trace;
  if (!j.contains("steps") || !j["steps"].is_array())
    throw std::invalid_argument("trace JSON needs a 'steps' array");
  for (const auto& sj : j["steps"]) {
    TraceStep step;
    const std::string loc_name = sj.at("location").get<std::string>();
    step.location = h.location_index(loc_name);
    if (step.location < 0)
      throw std::invalid_argument("trace references unknown location '" + loc_name + "'");
    step.incoming_transition = sj.at("via").get<int>();
    if (step.incoming_transition < 0 ||
        step.incoming_transition >= static_cast<int>(h.transitions.size()))
      throw std::invalid_argument("trace references an unknown transition");
    if (h.transitions[static_cast<size_t>(step.incoming_transition)].target != step.location)
      throw std::invalid_argument("trace transition does not enter its step location");
    step.dwell = sj.at("dwell").get<double>();
    if (!(step.dwell >= 0.0)) throw std::invalid_argument("trace dwell must be nonnegative");
    step.entry.assign(h.vars.size(), 0.0);
    step.exit.assign(h.vars.size(), 0.0);
    for (size_t k = 0; k < h.vars.size(); ++k) {
      step.entry[k] = sj.at("entry").at(h.vars[k].name).get<double>();
      step.exit[k] = sj.at("exit").at(h.vars[k].name).get<double>();
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

}  // namespace hare
