#include "segkit/geometry.hpp"

#include <cmath>
#include <sstream>

#include "segkit/errors.hpp"

namespace segkit {

Affine identity_affine() {
  Affine a{};
  for (int i = 0; i < 4; ++i) a[i][i] = 1.0;
  return a;
}

Affine diagonal_affine(const std::array<double, 3>& spacing) {
  Affine a{};
  for (int i = 0; i < 3; ++i) a[i][i] = spacing[i];
  a[3][3] = 1.0;
  return a;
}

void VolumeGeometry::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] <= 0)
      throw Error::config("geometry: dims must be positive on every axis");
    if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
      throw Error::config("geometry: spacing must be positive on every axis");
  }
  const double* last = affine[3].data();
  if (last[0] != 0.0 || last[1] != 0.0 || last[2] != 0.0 || last[3] != 1.0)
    throw Error::config("geometry: affine last row must be (0,0,0,1)");
}

VolumeGeometry make_geometry(const std::array<std::int64_t, 3>& dims,
                             const std::array<double, 3>& spacing) {
  VolumeGeometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.affine = diagonal_affine(spacing);
  g.validate();
  return g;
}

bool same_grid(const VolumeGeometry& a, const VolumeGeometry& b, double tol) {
  if (a.dims != b.dims) return false;
  for (int i = 0; i < 3; ++i)
    if (std::fabs(a.spacing[i] - b.spacing[i]) > tol) return false;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (std::fabs(a.affine[i][j] - b.affine[i][j]) > tol) return false;
  return true;
}

void require_same_grid(const VolumeGeometry& a, const VolumeGeometry& b, const char* what) {
  if (same_grid(a, b)) return;
  std::ostringstream os;
  os << what << ": geometry mismatch (" << a.dims[0] << "x" << a.dims[1] << "x" << a.dims[2]
     << " vs " << b.dims[0] << "x" << b.dims[1] << "x" << b.dims[2] << ")";
  throw Error::geometry(os.str());
}

}  // namespace segkit
