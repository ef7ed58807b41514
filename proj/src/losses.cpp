#include "lumen/losses.hpp"

#include <cstdio>

namespace lumen {

std::string LossReport::csv_header() {
  std::string out = "step";
  for (auto n : names) {
    out += ',';
    out += n;
  }
  return out;
}

std::string LossReport::csv_row(long step) const {
  std::string out = std::to_string(step);
  char buf[32];
  for (double v : values()) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    out += buf;
  }
  return out;
}

}  // namespace lumen
