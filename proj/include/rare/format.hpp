#pragma once

#include <charconv>
#include <string>

namespace rare {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string shortest(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace rare
