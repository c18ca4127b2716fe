#include "hare/parser.hpp"

#include "hare/numfmt.hpp"

namespace hare {

namespace {

void emit_constraints(std::string& out, const std::vector<LinearConstraint>& cs,
                      const std::vector<std::string>& names) {
  for (size_t i = 0; i < cs.size(); ++i) {
    if (i) out += ", ";
    out += cs[i].to_string(names);
  }
}

}  // namespace

std::string serialize_model(const HybridAutomaton& h) {
  const std::vector<std::string> names = h.var_names();
  std::string out;
  out += "automaton " + h.name + "\n";
  if (!h.vars.empty()) {
    out += "var ";
    for (size_t i = 0; i < h.vars.size(); ++i) {
      if (i) out += ", ";
      out += h.vars[i].name + " in [" + format_double(h.vars[i].range.lo) + ", " +
             format_double(h.vars[i].range.hi) + "]";
    }
    out += ";\n";
  }
  if (h.initial >= 0)
    out += "init " + h.locations[static_cast<size_t>(h.initial)].name + ";\n";

  for (const auto& loc : h.locations) {
    if (loc.is_initial) {
      out += "location " + loc.name + " {}\n";
      continue;
    }
    out += "location " + loc.name + " {\n";
    if (!loc.invariant.empty()) {
      out += "  invariant: ";
      emit_constraints(out, loc.invariant, names);
      out += ";\n";
    }
    if (!loc.flows.empty()) {
      out += "  flow: ";
      for (size_t vi = 0; vi < loc.flows.size(); ++vi) {
        if (vi) out += " ";
        out += "d" + names[vi];
        if (const auto* iv = std::get_if<Interval>(&loc.flows[vi])) {
          out += " in [" + format_double(iv->lo) + ", " + format_double(iv->hi) + "]";
        } else {
          out += " = " + std::get<Expr>(loc.flows[vi]).to_string(names);
        }
        out += ";";
      }
      out += "\n";
    }
    out += "}\n";
  }

  std::string bad;
  for (const auto& loc : h.locations) {
    if (!loc.is_bad) continue;
    if (!bad.empty()) bad += ", ";
    bad += loc.name;
  }
  if (!bad.empty()) out += "bad: " + bad + ";\n";

  for (const auto& t : h.transitions) {
    out += "transition " + h.locations[static_cast<size_t>(t.source)].name + " -> " +
           h.locations[static_cast<size_t>(t.target)].name + " {";
    bool inner = false;
    if (!t.guard.empty()) {
      out += " guard: ";
      emit_constraints(out, t.guard, names);
      out += ";";
      inner = true;
    }
    if (!t.resets.empty()) {
      out += " reset: ";
      for (size_t i = 0; i < t.resets.size(); ++i) {
        if (i) out += ", ";
        out += names[static_cast<size_t>(t.resets[i].var)] + " := " +
               format_double(t.resets[i].value);
      }
      out += ";";
      inner = true;
    }
    out += inner ? " }\n" : "}\n";
  }
  return out;
}

}  // namespace hare
