#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "segkit/components.hpp"
#include "segkit/volume.hpp"

namespace segkit {

// Knobs of the lesion-wise protocol. The defaults (26-connectivity,
// merge/match dilation radius 3, false-positive penalties dice 0 and
// HD95 374 mm, mean aggregation) are common conventions for the
// BraTS-style lesion-wise scores; all of them are configurable.
struct LesionwiseParams {
  int match_dilation_radius = 3;
  std::int64_t min_gt_lesion_size = 0;  // smaller gt lesions are dropped from scoring
  double fp_dice = 0.0;
  double fp_hd95_mm = 374.0;  // about the diagonal of a 240x240x155 mm volume
  Connectivity connectivity = Connectivity::c26;

  void validate() const;
};

// overlap measure; both empty -> 1, exactly one empty -> 0
double dice(const BinaryMask& pred, const BinaryMask& gt);

// 95th percentile (linear interpolation) of the pooled directed
// nearest-neighbor distances, in mm. Both empty -> 0, exactly one
// empty -> empty_penalty_mm.
double hd95(const BinaryMask& pred, const BinaryMask& gt, double empty_penalty_mm = 374.0);

// One scored entry: a gt lesion together with the pred components
// assigned to it, or an unmatched pred component (false positive).
struct LesionEntry {
  int gt_lesion_id = 0;  // 1-based; 0 for false-positive entries
  std::vector<std::uint32_t> pred_component_ids;
  std::int64_t gt_voxels = 0;
  std::int64_t pred_voxels = 0;
  double dice_value = 0.0;
  double hd95_mm = 0.0;
  bool false_positive = false;
};

struct RegionScores {
  double volume_dice = 0.0;     // whole-mask overlap
  double volume_hd95_mm = 0.0;  // whole-mask HD95
  std::vector<LesionEntry> entries;
  double lw_dice = 0.0;     // mean of entry dice values, penalties included
  double lw_hd95_mm = 0.0;  // mean of entry hd95 values
  int n_lesions = 0;
  int n_fp = 0;
};

struct CaseReport {
  std::string case_id;
  std::array<RegionScores, 3> regions;  // indexed by Region: ET, TC, WT

  RegionScores& region(Region r) { return regions[static_cast<int>(r)]; }
  const RegionScores& region(Region r) const { return regions[static_cast<int>(r)]; }
};

// Ground-truth lesions: connected components whose radius-r dilations
// intersect are merged into one lesion; lesions below
// min_gt_lesion_size are discarded. Masks come back in deterministic
// id order.
std::vector<BinaryMask> lesion_partition(const BinaryMask& gt, const LesionwiseParams& params);

// Scores one region. Pred components are assigned to the gt lesion
// whose dilated mask they overlap most (ties: larger overlap, then
// lower lesion id); unmatched pred components and unmatched gt lesions
// contribute the configured penalties. Empty gt and empty pred yield
// the single entry (1.0, 0.0).
RegionScores lesionwise_scores(const BinaryMask& pred, const BinaryMask& gt,
                               const LesionwiseParams& params);

// ET, TC and WT masks of both volumes scored with dice/hd95 plus the
// lesion-wise protocol.
CaseReport evaluate_case(const LabelVolume& pred, const LabelVolume& gt,
                         const LesionwiseParams& params, const std::string& case_id = "");

// percentile in [0,100] with linear interpolation between order
// statistics; `values` need not be sorted
double percentile(std::vector<double> values, double pct);

}  // namespace segkit
