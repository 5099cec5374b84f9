#pragma once

#include <array>
#include <cstdint>

namespace segkit {

using Affine = std::array<std::array<double, 4>, 4>;  // row-major voxel -> world

Affine identity_affine();
Affine diagonal_affine(const std::array<double, 3>& spacing);

// Grid metadata carried by every volume. Index order is x fastest,
// i.e. linear index = x + dims[0]*(y + dims[1]*z).
struct VolumeGeometry {
  std::array<std::int64_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Affine affine = identity_affine();

  std::int64_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }

  std::int64_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }

  // Throws Error::config when dims/spacing are non-positive or the
  // affine's last row is not (0,0,0,1).
  void validate() const;
};

VolumeGeometry make_geometry(const std::array<std::int64_t, 3>& dims,
                             const std::array<double, 3>& spacing = {1.0, 1.0, 1.0});

// Same grid: equal dims, spacing and affine within `tol`.
bool same_grid(const VolumeGeometry& a, const VolumeGeometry& b, double tol = 1e-4);

// Throws Error::geometry naming `what` when the grids differ.
void require_same_grid(const VolumeGeometry& a, const VolumeGeometry& b, const char* what);

}  // namespace segkit
