#pragma once

#include <string>
#include <vector>

#include "segkit/metrics.hpp"
#include "segkit/postprocess.hpp"
#include "segkit/volume.hpp"

namespace segkit {

// Which post-processing knob the grid drives. For `ratio`, the rule's
// threshold is replaced by each grid value in turn.
struct SweepParameter {
  enum class Kind { min_component_size, ratio };
  Kind kind = Kind::min_component_size;
  RatioRule rule;  // used when kind == ratio
};

struct SweepCase {
  std::string case_id;
  LabelVolume pred;
  LabelVolume gt;
};

struct SweepSpec {
  SweepParameter parameter;
  std::vector<double> grid;  // strictly increasing
  std::vector<Region> objective_regions{Region::ET, Region::TC, Region::WT};
  LesionwiseParams metrics;
  Connectivity connectivity = Connectivity::c26;
  // Held-fixed size filter applied before a swept ratio rule, so ratio
  // sweeps can run on top of the preset's component cleaning.
  std::int64_t baseline_min_size = 0;

  void validate() const;
};

struct SweepPoint {
  double value = 0.0;
  double mean_objective = 0.0;          // objective averaged over cases
  std::array<double, 3> region_mean{};  // per-region lw_dice averaged over cases
};

struct SweepCurve {
  std::vector<SweepPoint> points;
  double best_value = 0.0;
  double best_objective = 0.0;  // ties broken toward the smallest grid value
};

SweepCurve sweep(const SweepSpec& spec, const std::vector<SweepCase>& cases, int jobs = 1);

// CSV columns (threshold, mean_lw_dice, lw_dice_ET, lw_dice_TC,
// lw_dice_WT) plus a JSON sidecar <csv_path>.json holding the best
// value/objective.
void emit_curve(const SweepCurve& curve, const std::string& csv_path);

SweepCurve parse_curve_csv(const std::string& csv_path);  // inverse of emit_curve's CSV part

}  // namespace segkit
