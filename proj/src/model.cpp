#include "hare/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hare/numfmt.hpp"

namespace hare {

double LinearConstraint::value(std::span<const double> valuation) const {
  double s = 0.0;
  for (const auto& [var, coeff] : coeffs) s += coeff * valuation[static_cast<size_t>(var)];
  return s;
}

double LinearConstraint::coefficient_norm() const {
  double s = 0.0;
  for (const auto& [var, coeff] : coeffs) s += coeff * coeff;
  return std::sqrt(s);
}

std::string LinearConstraint::to_string(const std::vector<std::string>& var_names) const {
  std::string body;
  bool first = true;
  for (const auto& [var, coeff] : coeffs) {
    const std::string& name = var_names.at(static_cast<size_t>(var));
    if (first) {
      if (coeff == 1.0) body = name;
      else if (coeff == -1.0) body = "-" + name;
      else body = format_double(coeff) + "*" + name;
      first = false;
      continue;
    }
    const double mag = std::abs(coeff);
    body += coeff < 0.0 ? " - " : " + ";
    if (mag == 1.0) body += name;
    else body += format_double(mag) + "*" + name;
  }
  const bool has_lo = lower != -kInf;
  const bool has_hi = upper != kInf;
  if (has_lo && has_hi && lower == upper && !strict_lower && !strict_upper)
    return body + " == " + format_double(lower);
  if (has_lo && has_hi)
    return format_double(lower) + (strict_lower ? " < " : " <= ") + body +
           (strict_upper ? " < " : " <= ") + format_double(upper);
  if (has_hi) return body + (strict_upper ? " < " : " <= ") + format_double(upper);
  if (has_lo) return body + (strict_lower ? " > " : " >= ") + format_double(lower);
  return body;
}

double constraint_margin(const LinearConstraint& c, std::span<const double> valuation) {
  const double v = c.value(valuation);
  double m = kInf;
  if (c.upper != kInf) m = std::min(m, c.upper - v);
  if (c.lower != -kInf) m = std::min(m, v - c.lower);
  return m;
}

bool satisfies(const LinearConstraint& c, std::span<const double> valuation) {
  const double v = c.value(valuation);
  if (c.upper != kInf && (c.strict_upper ? v >= c.upper : v > c.upper)) return false;
  if (c.lower != -kInf && (c.strict_lower ? v <= c.lower : v < c.lower)) return false;
  return true;
}

int HybridAutomaton::var_index(const std::string& var_name) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == var_name) return static_cast<int>(i);
  return -1;
}

int HybridAutomaton::location_index(const std::string& location_name) const {
  for (size_t i = 0; i < locations.size(); ++i)
    if (locations[i].name == location_name) return static_cast<int>(i);
  return -1;
}

std::vector<int> HybridAutomaton::bad_locations() const {
  std::vector<int> out;
  for (size_t i = 0; i < locations.size(); ++i)
    if (locations[i].is_bad) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<std::string> HybridAutomaton::var_names() const {
  std::vector<std::string> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.name);
  return out;
}

double Trace::total_time() const {
  double t = 0.0;
  for (const auto& s : steps) t += s.dwell;
  return t;
}

std::string ValidationReport::summary() const {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v.message;
  }
  return s;
}

namespace {

bool valid_var(const HybridAutomaton& h, int var) {
  return var >= 0 && var < static_cast<int>(h.vars.size());
}

void check_constraints(const HybridAutomaton& h, const std::vector<LinearConstraint>& cs,
                       const std::string& where, ValidationReport& report) {
  for (const auto& c : cs) {
    if (c.coeffs.empty()) {
      report.violations.push_back({"constraint with no variable in " + where});
      continue;
    }
    bool all_zero = true;
    for (const auto& [var, coeff] : c.coeffs) {
      if (!valid_var(h, var))
        report.violations.push_back({"unknown variable in " + where});
      if (coeff != 0.0) all_zero = false;
    }
    if (all_zero)
      report.violations.push_back({"constraint with all-zero coefficients in " + where});
    if (c.lower != -kInf && c.upper != kInf && c.lower > c.upper)
      report.violations.push_back({"constraint bounds cross (lower > upper) in " + where});
  }
}

}  // namespace

ValidationReport validate_automaton(const HybridAutomaton& h) {
  ValidationReport report;

  std::set<std::string> names;
  for (const auto& v : h.vars) {
    if (!names.insert(v.name).second)
      report.violations.push_back({"duplicate variable name '" + v.name + "'"});
    if (!v.range.valid() || v.range.lo == -kInf || v.range.hi == kInf ||
        std::isnan(v.range.lo) || std::isnan(v.range.hi))
      report.violations.push_back({"variable '" + v.name + "' needs a finite range"});
  }

  std::set<std::string> loc_names;
  int initial_count = 0;
  for (size_t li = 0; li < h.locations.size(); ++li) {
    const Location& loc = h.locations[li];
    if (!loc_names.insert(loc.name).second)
      report.violations.push_back({"duplicate location '" + loc.name + "'"});
    if (loc.is_initial) ++initial_count;

    if (loc.is_initial) {
      if (!loc.invariant.empty())
        report.violations.push_back({"initial location '" + loc.name + "' has an invariant"});
      if (!loc.flows.empty())
        report.violations.push_back({"initial location '" + loc.name + "' has flows"});
      continue;
    }

    check_constraints(h, loc.invariant, "invariant of '" + loc.name + "'", report);
    if (loc.flows.size() != h.vars.size()) {
      for (size_t vi = 0; vi < h.vars.size(); ++vi)
        if (vi >= loc.flows.size())
          report.violations.push_back(
              {"flow missing for " + h.vars[vi].name + " in '" + loc.name + "'"});
      if (loc.flows.size() > h.vars.size())
        report.violations.push_back({"duplicate flow entries in '" + loc.name + "'"});
    } else {
      for (size_t vi = 0; vi < loc.flows.size(); ++vi) {
        if (const auto* iv = std::get_if<Interval>(&loc.flows[vi])) {
          if (!iv->valid())
            report.violations.push_back(
                {"rate interval with lo > hi for " + h.vars[vi].name + " in '" + loc.name + "'"});
        } else {
          const auto& e = std::get<Expr>(loc.flows[vi]);
          if (e.empty()) {
            report.violations.push_back(
                {"flow missing for " + h.vars[vi].name + " in '" + loc.name + "'"});
            continue;
          }
          for (int used : e.variables())
            if (!valid_var(h, used))
              report.violations.push_back(
                  {"unknown variable in flow of '" + loc.name + "'"});
        }
      }
    }
  }

  if (initial_count != 1)
    report.violations.push_back(
        {"expected exactly one initial location, found " + std::to_string(initial_count)});
  if (h.initial < 0 || h.initial >= static_cast<int>(h.locations.size()) ||
      !h.locations[static_cast<size_t>(h.initial)].is_initial)
    report.violations.push_back({"initial location index is not marked initial"});

  for (size_t ti = 0; ti < h.transitions.size(); ++ti) {
    const Transition& t = h.transitions[ti];
    const std::string where = "transition #" + std::to_string(ti);
    if (t.source < 0 || t.source >= static_cast<int>(h.locations.size()) ||
        t.target < 0 || t.target >= static_cast<int>(h.locations.size())) {
      report.violations.push_back({where + " references an unknown location"});
      continue;
    }
    if (h.locations[static_cast<size_t>(t.target)].is_initial)
      report.violations.push_back({where + ": transition into initial location"});
    if (h.locations[static_cast<size_t>(t.source)].is_initial && !t.guard.empty())
      report.violations.push_back({where + ": guard on initial transition"});
    check_constraints(h, t.guard, where + " guard", report);
    std::set<int> reset_vars;
    for (const auto& r : t.resets) {
      if (!valid_var(h, r.var)) {
        report.violations.push_back({where + " resets an unknown variable"});
        continue;
      }
      if (!reset_vars.insert(r.var).second)
        report.violations.push_back(
            {where + " resets " + h.vars[static_cast<size_t>(r.var)].name + " twice"});
    }
  }

  return report;
}

bool is_linear(const HybridAutomaton& h) {
  for (const auto& loc : h.locations) {
    if (loc.is_initial) continue;
    for (const auto& f : loc.flows) {
      if (std::holds_alternative<Interval>(f)) continue;
      if (!std::get<Expr>(f).is_constant()) return false;
    }
  }
  return true;
}

Interval rate_interval(const Location& loc, int var) {
  const Flow& f = loc.flows.at(static_cast<size_t>(var));
  if (const auto* iv = std::get_if<Interval>(&f)) return *iv;
  const Expr& e = std::get<Expr>(f);
  return Interval(e.constant_value());
}

bool path_exists(const HybridAutomaton& h, const Path& path) {
  int at = h.initial;
  for (int ti : path.transitions) {
    if (ti < 0 || ti >= static_cast<int>(h.transitions.size())) return false;
    const Transition& t = h.transitions[static_cast<size_t>(ti)];
    if (t.source != at) return false;
    at = t.target;
  }
  return true;
}

std::vector<int> path_locations(const HybridAutomaton& h, const Path& path) {
  std::vector<int> out;
  out.push_back(h.initial);
  for (int ti : path.transitions)
    out.push_back(h.transitions.at(static_cast<size_t>(ti)).target);
  return out;
}

}  // namespace hare
