#include "segkit/volume.hpp"

#include <algorithm>

#include "segkit/errors.hpp"

namespace segkit {

std::int64_t BinaryMask::count_true() const {
  return std::count_if(voxels.begin(), voxels.end(), [](std::uint8_t v) { return v != 0; });
}

const char* to_string(Region r) {
  switch (r) {
    case Region::ET: return "ET";
    case Region::TC: return "TC";
    case Region::WT: return "WT";
  }
  return "?";
}

Region region_from_string(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "ET") return Region::ET;
  if (up == "TC") return Region::TC;
  if (up == "WT") return Region::WT;
  throw Error::config("unknown region '" + name + "' (expected ET, TC or WT)");
}

}  // namespace segkit
