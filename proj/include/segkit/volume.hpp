#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "segkit/geometry.hpp"

namespace segkit {

// BraTS 2023 label codes. The NIfTI reader can remap other file
// conventions onto these through a LabelSchema.
namespace labels {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kNcr = 1;  // non-enhancing component
inline constexpr std::uint8_t kEd = 2;   // edema / SNFH
inline constexpr std::uint8_t kEt = 3;   // enhancing tumor
}  // namespace labels

// Nested evaluation regions: ET subset of TC subset of WT.
enum class Region : int { ET = 0, TC = 1, WT = 2 };
inline constexpr std::array<Region, 3> kAllRegions{Region::ET, Region::TC, Region::WT};
const char* to_string(Region r);
Region region_from_string(const std::string& name);  // throws Error::config

template <class T>
struct DenseVolume {
  VolumeGeometry geometry;
  std::vector<T> voxels;

  DenseVolume() = default;
  explicit DenseVolume(const VolumeGeometry& g, T fill = T{})
      : geometry(g), voxels(static_cast<std::size_t>(g.voxel_count()), fill) {}

  T& at(std::int64_t x, std::int64_t y, std::int64_t z) {
    return voxels[static_cast<std::size_t>(geometry.index(x, y, z))];
  }
  const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return voxels[static_cast<std::size_t>(geometry.index(x, y, z))];
  }
};

// Discrete label codes in {0,1,2,3}.
struct LabelVolume : DenseVolume<std::uint8_t> {
  using DenseVolume::DenseVolume;
};

// 0 = false, 1 = true.
struct BinaryMask : DenseVolume<std::uint8_t> {
  using DenseVolume::DenseVolume;
  std::int64_t count_true() const;
};

// Per-voxel probabilities of the nested regions, indexed by Region.
struct RegionProbVolume {
  VolumeGeometry geometry;
  std::array<std::vector<float>, 3> channels;

  RegionProbVolume() = default;
  explicit RegionProbVolume(const VolumeGeometry& g) : geometry(g) {
    for (auto& c : channels) c.assign(static_cast<std::size_t>(g.voxel_count()), 0.0f);
  }
  std::vector<float>& channel(Region r) { return channels[static_cast<int>(r)]; }
  const std::vector<float>& channel(Region r) const { return channels[static_cast<int>(r)]; }
};

// Softmax output over {background, NCR, ED, ET}; channel index equals
// the label code.
struct LabelProbVolume {
  VolumeGeometry geometry;
  std::array<std::vector<float>, 4> channels;

  LabelProbVolume() = default;
  explicit LabelProbVolume(const VolumeGeometry& g) : geometry(g) {
    for (auto& c : channels) c.assign(static_cast<std::size_t>(g.voxel_count()), 0.0f);
  }
};

}  // namespace segkit
