#pragma once

#include <cstdint>
#include <vector>

#include "segkit/volume.hpp"

namespace segkit {

enum class Connectivity : int { c6 = 6, c18 = 18, c26 = 26 };
Connectivity connectivity_from_int(int n);  // throws Error::config unless 6/18/26

// Component ids are assigned in order of first encounter during a
// lexicographic (x fastest) voxel scan, so id 1 is the component whose
// smallest linear index is smallest, and the labeling is deterministic.
struct ComponentLabeling {
  VolumeGeometry geometry;
  std::vector<std::uint32_t> ids;       // 0 = background, 1..n
  std::vector<std::int64_t> sizes;      // sizes[k-1] = voxel count of component k
  Connectivity connectivity = Connectivity::c26;

  std::uint32_t count() const { return static_cast<std::uint32_t>(sizes.size()); }
};

ComponentLabeling connected_components(const BinaryMask& mask, Connectivity connectivity);

}  // namespace segkit
