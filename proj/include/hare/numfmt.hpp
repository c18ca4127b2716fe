#pragma once

#include <charconv>
#include <string>

namespace hare {

// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double x) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

}  // namespace hare
