#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace segkit {

// Exact squared Euclidean distance (mm^2) from every voxel to the
// nearest nonzero voxel of `mask`, honoring anisotropic spacing.
// Separable lower-envelope transform, one parabola pass per axis.
// Returns +infinity everywhere when the mask is empty. `mask` is
// x-fastest with extent `dims`.
std::vector<double> squared_distance_transform(const std::uint8_t* mask,
                                               const std::array<std::int64_t, 3>& dims,
                                               const std::array<double, 3>& spacing_mm);

}  // namespace segkit
