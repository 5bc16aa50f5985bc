#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace distcl {

// 17 significant digits: enough for exact double round-trips, and stable
// bytes for golden-file comparisons.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// Strict double parse: the whole token must be consumed.
inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size();
}

}  // namespace distcl
