#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segkit/nifti.hpp"
#include "segkit/volume.hpp"

namespace segkit {

// One model fold's prediction for a case.
struct MemberOutput {
  std::string model;  // "nnunet", "swin", "nnunet-et-only", ...
  int fold = 0;
  ProbVolume payload;
};

struct EnsembleSource {
  std::string model;
  double weight = 1.0;
};

// Which models feed each region channel. Fusion averages over every
// (model, fold) member of a region's sources, weighted per model.
struct EnsembleConfig {
  std::array<std::vector<EnsembleSource>, 3> sources;  // indexed by Region
  int expected_folds = 5;

  std::vector<EnsembleSource>& region_sources(Region r) { return sources[static_cast<int>(r)]; }
  const std::vector<EnsembleSource>& region_sources(Region r) const {
    return sources[static_cast<int>(r)];
  }

  // "ped": ET from nnunet-et-only + swin, TC/WT from nnunet + swin.
  // "men": all regions from nnunet + swin. "met": nnunet only.
  static EnsembleConfig preset(std::string_view task);
  void validate() const;
};

// Per-voxel, per-channel weighted arithmetic mean.
RegionProbVolume ensemble_mean(std::span<const RegionProbVolume* const> members,
                               std::span<const double> weights);

// Applies the config's per-region wiring to one case's members.
// LabelProbVolume members are converted to region space first. A model
// with a fold count different from expected_folds is averaged as-is
// after a warning; a configured model with no members at all is an
// error.
RegionProbVolume fuse_case(const EnsembleConfig& config, std::span<const MemberOutput> members);

// JSON manifest: array of {"model": str, "fold": int, "path": str}.
struct ManifestEntry {
  std::string model;
  int fold = 0;
  std::string path;
};
std::vector<ManifestEntry> read_member_manifest(const std::string& path);
std::vector<MemberOutput> load_members(const std::vector<ManifestEntry>& entries);

}  // namespace segkit
