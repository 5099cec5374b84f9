#include "segkit/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "segkit/errors.hpp"
#include "segkit/parallel.hpp"
#include "segkit/regions.hpp"
#include "segkit/report.hpp"

namespace segkit {

namespace {

// Zeroes the components of `cc` smaller than min_size inside `volume`.
// Sharing one labeling across all grid values is what makes the sweep
// linear in |grid| x |cases|; the result is identical to calling
// filter_small_components at each value.
LabelVolume apply_size_cutoff(const LabelVolume& volume, const ComponentLabeling& cc,
                              std::int64_t min_size) {
  LabelVolume out = volume;
  if (min_size <= 0) return out;
  std::vector<std::uint8_t> drop(cc.sizes.size() + 1, 0);
  for (std::uint32_t k = 1; k <= cc.count(); ++k) drop[k] = cc.sizes[k - 1] < min_size;
  for (std::size_t i = 0; i < out.voxels.size(); ++i)
    if (drop[cc.ids[i]]) out.voxels[i] = labels::kBackground;
  return out;
}

BinaryMask foreground_of(const LabelVolume& volume) {
  BinaryMask mask(volume.geometry);
  for (std::size_t i = 0; i < volume.voxels.size(); ++i)
    mask.voxels[i] = volume.voxels[i] != labels::kBackground;
  return mask;
}

}  // namespace

void SweepSpec::validate() const {
  if (grid.empty()) throw Error::config("sweep: grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw Error::config("sweep: grid values must be strictly increasing");
  if (objective_regions.empty())
    throw Error::config("sweep: objective needs at least one region");
  metrics.validate();
  if (baseline_min_size < 0) throw Error::config("sweep: baseline_min_size must be >= 0");
  if (parameter.kind == SweepParameter::Kind::min_component_size) {
    for (double v : grid) {
      if (v < 0.0 || std::fabs(v - std::nearbyint(v)) > 1e-9)
        throw Error::config("sweep: component-size grid values must be non-negative integers");
    }
  } else {
    for (double v : grid)
      if (v < 0.0 || v > 1.0)
        throw Error::config("sweep: ratio grid values must lie in [0,1]");
    RatioRule probe = parameter.rule;
    probe.threshold = grid.front();
    probe.validate();
  }
}

SweepCurve sweep(const SweepSpec& spec, const std::vector<SweepCase>& cases, int jobs) {
  spec.validate();
  if (cases.empty()) throw Error::config("sweep: case list must not be empty");
  for (const SweepCase& c : cases)
    require_same_grid(c.pred.geometry, c.gt.geometry, ("sweep case " + c.case_id).c_str());

  const bool size_sweep = spec.parameter.kind == SweepParameter::Kind::min_component_size;

  // Per-case work independent of the grid value.
  struct CaseCache {
    LabelVolume base;              // pred after any held-fixed filtering
    ComponentLabeling components;  // of base foreground (size sweeps only)
    std::array<BinaryMask, 3> gt_masks;
  };
  std::vector<CaseCache> cache(cases.size());
  parallel_for(static_cast<std::int64_t>(cases.size()), jobs, [&](std::int64_t i) {
    CaseCache& c = cache[static_cast<std::size_t>(i)];
    const SweepCase& sc = cases[static_cast<std::size_t>(i)];
    if (size_sweep) {
      c.base = sc.pred;
      c.components = connected_components(foreground_of(c.base), spec.connectivity);
    } else {
      c.base = spec.baseline_min_size > 0
                   ? filter_small_components(sc.pred, spec.baseline_min_size, spec.connectivity)
                   : sc.pred;
    }
    for (Region r : kAllRegions)
      c.gt_masks[static_cast<int>(r)] = region_mask(sc.gt, r);
  });

  SweepCurve curve;
  curve.points.reserve(spec.grid.size());
  std::vector<std::array<double, 3>> per_case(cases.size());

  for (double value : spec.grid) {
    parallel_for(static_cast<std::int64_t>(cases.size()), jobs, [&](std::int64_t i) {
      const CaseCache& c = cache[static_cast<std::size_t>(i)];
      LabelVolume processed;
      if (size_sweep) {
        processed = apply_size_cutoff(c.base, c.components, static_cast<std::int64_t>(value));
      } else {
        RatioRule rule = spec.parameter.rule;
        rule.threshold = value;
        processed = ratio_relabel(c.base, std::span<const RatioRule>(&rule, 1));
      }
      for (Region r : kAllRegions) {
        const BinaryMask pm = region_mask(processed, r);
        per_case[static_cast<std::size_t>(i)][static_cast<int>(r)] =
            lesionwise_scores(pm, c.gt_masks[static_cast<int>(r)], spec.metrics).lw_dice;
      }
    });

    SweepPoint point;
    point.value = value;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      double objective = 0.0;
      for (Region r : spec.objective_regions) objective += per_case[i][static_cast<int>(r)];
      objective /= static_cast<double>(spec.objective_regions.size());
      point.mean_objective += objective;
      for (int r = 0; r < 3; ++r) point.region_mean[r] += per_case[i][r];
    }
    point.mean_objective /= static_cast<double>(cases.size());
    for (int r = 0; r < 3; ++r) point.region_mean[r] /= static_cast<double>(cases.size());
    curve.points.push_back(point);
  }

  curve.best_value = curve.points.front().value;
  curve.best_objective = curve.points.front().mean_objective;
  for (const SweepPoint& p : curve.points) {
    if (p.mean_objective > curve.best_objective) {
      curve.best_objective = p.mean_objective;
      curve.best_value = p.value;
    }
  }
  return curve;
}

namespace {
std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}
}  // namespace

void emit_curve(const SweepCurve& curve, const std::string& csv_path) {
  std::ostringstream os;
  os << "threshold,mean_lw_dice,lw_dice_ET,lw_dice_TC,lw_dice_WT\n";
  for (const SweepPoint& p : curve.points) {
    os << fixed9(p.value) << ',' << fixed9(p.mean_objective) << ',' << fixed9(p.region_mean[0])
       << ',' << fixed9(p.region_mean[1]) << ',' << fixed9(p.region_mean[2]) << '\n';
  }
  write_text_file(csv_path, os.str());

  std::ostringstream js;
  js << "{\n  \"best_value\": " << fixed9(curve.best_value)
     << ",\n  \"best_objective\": " << fixed9(curve.best_objective)
     << ",\n  \"n_points\": " << curve.points.size() << "\n}\n";
  write_text_file(csv_path + ".json", js.str());
}

SweepCurve parse_curve_csv(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error::io(csv_path + ": cannot open curve CSV");
  std::string line;
  if (!std::getline(in, line)) throw Error::format(csv_path + ": empty curve CSV");
  SweepCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SweepPoint p;
    char* end = nullptr;
    const char* s = line.c_str();
    double cols[5];
    for (int c = 0; c < 5; ++c) {
      cols[c] = std::strtod(s, &end);
      if (end == s) throw Error::format(csv_path + ": bad curve row '" + line + "'");
      s = (*end == ',') ? end + 1 : end;
    }
    p.value = cols[0];
    p.mean_objective = cols[1];
    p.region_mean = {cols[2], cols[3], cols[4]};
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace segkit
