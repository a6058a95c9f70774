#pragma once

#include <cstdio>
#include <string>

namespace ipcae {

/// Shortest text form that round-trips a double exactly; used for every
/// number we write to CSV so outputs are byte-stable.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ipcae
