#pragma once

#include <cstdio>
#include <string>

namespace qstack {

/// Deterministic float formatting for CSV/SVG output (%.10g).
inline std::string fmt_g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace qstack
