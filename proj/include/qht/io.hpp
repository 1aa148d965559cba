#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "qht/error.hpp"

namespace qht::io {

// Shortest-stable text form used by every CSV writer: 17 significant digits.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ValidationError("cannot open output file " + path);
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("cannot open input file " + path);
  return in;
}

} // namespace qht::io
