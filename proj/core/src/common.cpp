#include <sstream>

#include "vectorpose/common.hpp"
#include "vectorpose/rng.hpp"

namespace vectorpose {

std::string to_string(Extents3 e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

std::string to_string(Vec3 v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& state) {
  std::istringstream is(state);
  Rng rng;
  is >> rng;
  if (!is) throw InvalidArgument("deserialize_rng: malformed engine state");
  return rng;
}

}  // namespace vectorpose
