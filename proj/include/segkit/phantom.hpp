#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "segkit/volume.hpp"

namespace segkit {

// Synthetic nested-ellipsoid tumor volumes with known ground truth,
// used as oracle inputs throughout the test suites. Objects are placed
// on a deterministic cell lattice so lesions and planted noise never
// touch; all randomness is a pure function of (seed, object index).
struct PhantomSpec {
  std::array<std::int64_t, 3> dims{64, 64, 64};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  int n_lesions = 1;
  std::array<double, 2> wt_radius_range{6.0, 9.0};  // per-axis radii, voxels
  std::array<double, 2> tc_radius_range{3.0, 6.0};
  std::array<double, 2> et_radius_range{1.5, 3.0};
  int n_spurious = 0;
  std::array<std::int64_t, 2> spurious_size_range{5, 10};  // exact voxel counts
  std::uint8_t spurious_label = labels::kEt;
  int prob_blur_radius = 0;
  double label_noise_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlantedLesion {
  std::array<std::int64_t, 3> center;
  std::array<double, 3> wt_radii, tc_radii, et_radii;
  std::int64_t wt_voxels = 0, tc_voxels = 0, et_voxels = 0;
};

struct PlantedComponent {
  std::array<std::int64_t, 3> seed_voxel;
  std::int64_t size = 0;
  std::uint8_t label = 0;
};

struct PhantomOutput {
  LabelVolume gt;
  LabelVolume pred;          // gt + spurious components + boundary label noise
  RegionProbVolume probs;    // box-blurred region indicators of pred
  std::vector<PlantedLesion> lesions;
  std::vector<PlantedComponent> spurious;
};

PhantomOutput generate_phantom(const PhantomSpec& spec);

std::string phantom_manifest_json(const PhantomSpec& spec, const PhantomOutput& out);

}  // namespace segkit
