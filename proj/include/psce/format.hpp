#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace psce {

// Shortest-safe text for a double; parsing it back yields the same bits.
inline std::string fmt_exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fixed significant digits for report tables; NaN prints as NA.
inline std::string fmt_num(double v, int digits = 10) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace psce
