#pragma once

#include <string>
#include <variant>

#include "hare/model.hpp"

namespace hare {

struct ParseError {
  int line = 1;    // 1-based
  int column = 1;  // 1-based
  std::string message;
  std::string token;  // offending lexeme, possibly empty at end of input

  std::string to_string() const;
};

using ParseResult = std::variant<HybridAutomaton, ParseError>;

// Parse the textual model format. On success the returned automaton passes
// validate_automaton. Never throws on malformed input; all lexical, syntactic
// and semantic problems come back as a ParseError with a position.
ParseResult parse_model(const std::string& text);

// Canonical text rendering; parse_model(serialize_model(h)) is structurally
// identical to h, and serializing the reparse reproduces the text verbatim.
std::string serialize_model(const HybridAutomaton& h);

}  // namespace hare
