#pragma once

#include <cstdio>
#include <string>

namespace fkneuro {

/// Round-trippable decimal text (17 significant digits).
inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace fkneuro
