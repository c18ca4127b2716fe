#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hare/cegar.hpp"
#include "hare/errors.hpp"
#include "hare/parser.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

// 0 safe/success, 1 unsafe/refuted, 2 unknown, 3 usage or parse error,
// 4 internal error.
constexpr int kExitSafe = 0;
constexpr int kExitUnsafe = 1;
constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 3;
constexpr int kExitInternal = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

hare::HybridAutomaton load_model(const std::string& path) {
  auto result = hare::parse_model(read_file(path));
  if (auto* err = std::get_if<hare::ParseError>(&result)) {
    std::cerr << path << ":" << err->to_string() << "\n";
    std::exit(kExitUsage);
  }
  return std::move(std::get<hare::HybridAutomaton>(result));
}

std::vector<double> parse_x0(const std::string& spec, const hare::HybridAutomaton& h) {
  std::vector<double> x0(h.vars.size());
  std::vector<bool> seen(h.vars.size(), false);
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--x0 items look like name=value");
    const std::string name = item.substr(0, eq);
    const int var = h.var_index(name);
    if (var < 0) throw UsageError("--x0 references unknown variable '" + name + "'");
    x0[static_cast<size_t>(var)] = std::stod(item.substr(eq + 1));
    seen[static_cast<size_t>(var)] = true;
  }
  for (size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw UsageError("--x0 is missing variable '" + h.vars[k].name + "'");
  return x0;
}

hare::Path parse_location_path(const std::string& spec, const hare::HybridAutomaton& h) {
  std::vector<int> locations;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const int li = h.location_index(name);
    if (li < 0) throw UsageError("--path references unknown location '" + name + "'");
    locations.push_back(li);
  }
  if (locations.empty() || locations.front() != h.initial)
    throw UsageError("--path must start at the initial location");
  hare::Path path;
  for (size_t i = 0; i + 1 < locations.size(); ++i) {
    int found = -1;
    for (size_t ti = 0; ti < h.transitions.size(); ++ti) {
      if (h.transitions[ti].source == locations[i] &&
          h.transitions[ti].target == locations[i + 1]) {
        found = static_cast<int>(ti);
        break;  // first declared transition between the pair
      }
    }
    if (found < 0)
      throw UsageError("no transition connects the consecutive --path locations");
    path.transitions.push_back(found);
  }
  return path;
}

std::vector<double> parse_durations(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

ordered_json jumps_json(const hare::Trajectory& traj, const hare::HybridAutomaton& h) {
  ordered_json jumps = ordered_json::array();
  for (const auto& j : traj.jumps) {
    ordered_json e;
    e["time"] = j.time;
    e["transition"] = j.transition;
    const auto& t = h.transitions[static_cast<size_t>(j.transition)];
    e["from"] = h.locations[static_cast<size_t>(t.source)].name;
    e["to"] = h.locations[static_cast<size_t>(t.target)].name;
    ordered_json pre = ordered_json::object(), post = ordered_json::object();
    for (size_t k = 0; k < h.vars.size(); ++k) {
      pre[h.vars[k].name] = j.pre[k];
      post[h.vars[k].name] = j.post[k];
    }
    e["pre"] = std::move(pre);
    e["post"] = std::move(post);
    jumps.push_back(std::move(e));
  }
  return jumps;
}

void write_trajectory(const hare::Trajectory& traj, const hare::HybridAutomaton& h,
                      const std::string& csv_path) {
  write_file(csv_path, hare::trajectory_csv(traj, h));
  write_file(csv_path + ".jumps.json", jumps_json(traj, h).dump(2) + "\n");
}

ordered_json violation_json(const hare::SimViolation& v, const hare::HybridAutomaton& h) {
  ordered_json out;
  switch (v.kind) {
    case hare::ViolationKind::InitialState: out["kind"] = "initial_state"; break;
    case hare::ViolationKind::Guard: out["kind"] = "guard"; break;
    case hare::ViolationKind::Invariant: out["kind"] = "invariant"; break;
    case hare::ViolationKind::Tube: out["kind"] = "tube"; break;
    case hare::ViolationKind::Evaluation: out["kind"] = "evaluation"; break;
  }
  out["time"] = v.time;
  if (v.constraint) out["constraint"] = v.constraint->to_string(h.var_names());
  out["detail"] = v.detail;
  return out;
}

int cmd_check(const std::string& model_path, hare::CegarConfig cfg,
              const std::string& csv_path) {
  hare::HybridAutomaton h = load_model(model_path);
  hare::Verdict verdict = hare::cegar_check(h, cfg);
  std::optional<std::string> csv_out;
  if (!csv_path.empty() && verdict.trajectory) {
    write_trajectory(*verdict.trajectory, h, csv_path);
    csv_out = csv_path;
  }
  std::cout << hare::report(verdict, h, csv_out);
  switch (verdict.kind) {
    case hare::VerdictKind::Safe: return kExitSafe;
    case hare::VerdictKind::Unsafe: return kExitUnsafe;
    case hare::VerdictKind::Unknown: return kExitUnknown;
  }
  return kExitInternal;
}

int cmd_abstract(const std::string& model_path, const std::string& out_path) {
  hare::HybridAutomaton h = load_model(model_path);
  auto origin = std::make_shared<const hare::HybridAutomaton>(std::move(h));
  hare::Abstraction a = hare::build_lha(origin);
  const std::string text = hare::serialize_model(a.lha);
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  return kExitSafe;
}

int cmd_simulate(const std::string& model_path, const std::string& path_spec,
                 const std::string& durations_spec, const std::string& x0_spec,
                 const std::string& csv_path, hare::SimConfig sim) {
  hare::HybridAutomaton h = load_model(model_path);
  const hare::Path path = parse_location_path(path_spec, h);
  const std::vector<double> durations = parse_durations(durations_spec);
  const std::vector<double> x0 = parse_x0(x0_spec, h);
  if (durations.size() != path.steps())
    throw UsageError("--durations needs " + std::to_string(path.steps()) +
                     " values for this path, got " + std::to_string(durations.size()));

  hare::SimResult result = hare::simulate_hybrid_path(h, path, x0, durations, sim);
  if (!result.ok()) {
    ordered_json out;
    out["result"] = "failure";
    out["failure"] = violation_json(result.violations.front(), h);
    std::cout << out.dump(2) << "\n";
    return kExitInternal;
  }
  if (csv_path.empty()) {
    std::cout << hare::trajectory_csv(result.trajectory, h);
  } else {
    write_trajectory(result.trajectory, h, csv_path);
  }
  return kExitSafe;
}

int cmd_validate(const std::string& model_path, const std::string& trace_path,
                 hare::SimConfig sim) {
  hare::HybridAutomaton h = load_model(model_path);
  hare::Trace trace;
  try {
    trace = hare::trace_from_json(read_file(trace_path), h);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << trace_path << ": " << e.what() << "\n";
    return kExitUsage;
  }
  hare::ValidationResult vr = hare::validate_counterexample(h, trace, sim);
  ordered_json out;
  out["result"] = vr.validated ? "validated" : "refuted";
  if (vr.first_failure) out["failure"] = violation_json(*vr.first_failure, h);
  ordered_json warnings = ordered_json::array();
  for (const auto& issue : vr.robustness.flagged) {
    ordered_json w;
    w["transition"] = issue.transition;
    w["constraint"] = issue.constraint.to_string(h.var_names());
    w["width"] = issue.width;
    if (issue.suggested) {
      w["suggested_lower"] = issue.suggested->lo;
      w["suggested_upper"] = issue.suggested->hi;
    }
    warnings.push_back(std::move(w));
  }
  out["warnings"] = std::move(warnings);
  std::cout << out.dump(2) << "\n";
  return vr.validated ? kExitSafe : kExitUnsafe;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hare - reachability analysis for nonlinear hybrid automata"};
  app.require_subcommand(1);

  std::string model_path, csv_path, out_path, path_spec, durations_spec, x0_spec,
      trace_path, strategy_name = "abs", metric_name = "euclid";
  hare::CegarConfig cfg;

  auto add_sim_flags = [&](CLI::App* cmd) {
    cmd->add_option("--eps-sim", cfg.sim.eps_sim,
                    "trajectory tube radius (default 1e-06)");
    cmd->add_option("--eps-robust", cfg.sim.eps_robust,
                    "robustness margin for guards and invariants (default 0.0001)");
    cmd->add_option("--step", cfg.sim.step, "RK4 integration step (default 0.001)");
    cmd->add_option("--max-steps", cfg.sim.max_steps,
                    "total integration step budget (default 20000000)");
  };

  CLI::App* check = app.add_subcommand("check", "run the abstraction-refinement loop");
  check->add_option("model", model_path, "model file")->required();
  check->add_option("--max-iters", cfg.max_iterations,
                    "refinement iteration budget (default 50)");
  check->add_option("--max-depth", cfg.max_path_depth,
                    "candidate path depth bound in transitions (default 12)");
  check->add_option("--strategy", strategy_name,
                    "refinement strategy: abs | diff | ratio (default abs)");
  check->add_option("--metric", metric_name,
                    "distance metric: euclid | manhattan (default euclid)");
  check->add_option("--eps-refine", cfg.strategy.threshold,
                    "divergence threshold for refinement (default 0.1)");
  check->add_option("--csv", csv_path, "write the validated trajectory as CSV here");
  check->add_flag("--dump-lp", cfg.dump_lp,
                  "write each candidate path's inequality system to stderr");
  add_sim_flags(check);

  CLI::App* abstract_cmd =
      app.add_subcommand("abstract", "write the initial rate-interval abstraction");
  abstract_cmd->add_option("model", model_path, "model file")->required();
  abstract_cmd->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* simulate = app.add_subcommand("simulate", "run one hybrid simulation");
  simulate->add_option("model", model_path, "model file")->required();
  simulate->add_option("--path", path_spec, "comma-separated location names")->required();
  simulate->add_option("--durations", durations_spec,
                       "comma-separated dwell times, one per non-initial path location")
      ->required();
  simulate->add_option("--x0", x0_spec, "initial valuation, name=value pairs")->required();
  simulate->add_option("--csv", csv_path, "trajectory CSV output (default stdout)");
  add_sim_flags(simulate);

  CLI::App* validate = app.add_subcommand("validate", "validate a trace file");
  validate->add_option("model", model_path, "model file")->required();
  validate->add_option("--trace", trace_path, "trace JSON file")->required();
  add_sim_flags(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (strategy_name == "abs") cfg.strategy.kind = hare::StrategyKind::AbsDistance;
    else if (strategy_name == "diff") cfg.strategy.kind = hare::StrategyKind::DiffOfRates;
    else if (strategy_name == "ratio") cfg.strategy.kind = hare::StrategyKind::RatioOfRates;
    else throw UsageError("unknown strategy '" + strategy_name + "'");
    if (metric_name == "euclid") cfg.metric.kind = hare::MetricKind::Euclidean;
    else if (metric_name == "manhattan") cfg.metric.kind = hare::MetricKind::Manhattan;
    else throw UsageError("unknown metric '" + metric_name + "'");

    if (check->parsed()) return cmd_check(model_path, cfg, csv_path);
    if (abstract_cmd->parsed()) return cmd_abstract(model_path, out_path);
    if (simulate->parsed())
      return cmd_simulate(model_path, path_spec, durations_spec, x0_spec, csv_path, cfg.sim);
    if (validate->parsed()) return cmd_validate(model_path, trace_path, cfg.sim);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (...) {
    std::cerr << "internal error\n";
    return kExitInternal;
  }
}
