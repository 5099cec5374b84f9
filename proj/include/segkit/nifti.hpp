#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "segkit/volume.hpp"

namespace segkit {

// Mapping from label codes as stored in a file to the internal
// {0,1,2,3} codes. Values outside the table are a schema error.
struct LabelSchema {
  std::map<int, std::uint8_t> mapping{{0, 0}, {1, 1}, {2, 2}, {3, 3}};

  // Pre-2023 BraTS files store ET as 4.
  static LabelSchema brats_legacy() { return {{{0, 0}, {1, 1}, {2, 2}, {4, 3}}}; }
};

struct NiftiHeaderSummary {
  int datatype = 0;
  std::array<std::int64_t, 3> dims{0, 0, 0};
  int channels = 1;  // product of the non-spatial dims
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Affine affine = identity_affine();
  double scl_slope = 1.0;
  double scl_inter = 0.0;
};

using ProbVolume = std::variant<RegionProbVolume, LabelProbVolume>;

NiftiHeaderSummary read_nifti_header(const std::string& path);

// Integer-valued 3D volume mapped through `schema`. Scaling must be
// identity for label files.
LabelVolume read_label_volume(const std::string& path, const LabelSchema& schema = {});

// 4D volume with 3 channels (ET/TC/WT region probabilities) or 4
// channels (background/NCR/ED/ET softmax). Values are clamped to
// [0,1]; an excess beyond 1e-3 triggers a warning.
ProbVolume read_prob_volume(const std::string& path);

// Same, assembled from 3 or 4 single-channel files on one grid.
ProbVolume read_prob_volume(const std::vector<std::string>& channel_paths);

// uint8 payload; a ".gz" suffix selects gzip. Writes are atomic
// (temp file + rename).
void write_label_volume(const LabelVolume& volume, const std::string& path);

// float32 4D payload.
void write_prob_volume(const RegionProbVolume& volume, const std::string& path);
void write_prob_volume(const LabelProbVolume& volume, const std::string& path);

}  // namespace segkit
