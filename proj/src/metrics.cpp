#include "segkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "segkit/edt.hpp"
#include "segkit/errors.hpp"
#include "segkit/geometry.hpp"
#include "segkit/postprocess.hpp"
#include "segkit/regions.hpp"

namespace segkit {

void LesionwiseParams::validate() const {
  if (match_dilation_radius < 0) throw Error::config("match_dilation_radius must be >= 0");
  if (min_gt_lesion_size < 0) throw Error::config("min_gt_lesion_size must be >= 0");
  if (fp_dice < 0.0 || fp_hd95_mm < 0.0) throw Error::config("penalties must be >= 0");
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double dice(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_grid(pred.geometry, gt.geometry, "dice");
  std::int64_t p = 0, g = 0, inter = 0;
  for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
    const bool pv = pred.voxels[i] != 0;
    const bool gv = gt.voxels[i] != 0;
    p += pv;
    g += gv;
    inter += pv && gv;
  }
  if (p == 0 && g == 0) return 1.0;
  if (p == 0 || g == 0) return 0.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

namespace {

struct Box {
  std::array<std::int64_t, 3> lo{0, 0, 0};
  std::array<std::int64_t, 3> hi{-1, -1, -1};  // inclusive; hi < lo means empty

  bool empty() const { return hi[0] < lo[0]; }
  std::array<std::int64_t, 3> extents() const {
    return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  }
  void include(std::int64_t x, std::int64_t y, std::int64_t z) {
    if (empty()) {
      lo = {x, y, z};
      hi = {x, y, z};
      return;
    }
    lo = {std::min(lo[0], x), std::min(lo[1], y), std::min(lo[2], z)};
    hi = {std::max(hi[0], x), std::max(hi[1], y), std::max(hi[2], z)};
  }
  void merge(const Box& other) {
    if (other.empty()) return;
    include(other.lo[0], other.lo[1], other.lo[2]);
    include(other.hi[0], other.hi[1], other.hi[2]);
  }
};

Box mask_bbox(const std::uint8_t* voxels, const VolumeGeometry& g) {
  Box box;
  std::int64_t idx = 0;
  for (std::int64_t z = 0; z < g.dims[2]; ++z)
    for (std::int64_t y = 0; y < g.dims[1]; ++y)
      for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx)
        if (voxels[idx]) box.include(x, y, z);
  return box;
}

std::vector<std::uint8_t> crop_mask(const std::uint8_t* voxels, const VolumeGeometry& g,
                                    const Box& box) {
  const auto ext = box.extents();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(ext[0] * ext[1] * ext[2]), 0);
  std::size_t o = 0;
  for (std::int64_t z = box.lo[2]; z <= box.hi[2]; ++z)
    for (std::int64_t y = box.lo[1]; y <= box.hi[1]; ++y)
      for (std::int64_t x = box.lo[0]; x <= box.hi[0]; ++x, ++o)
        out[o] = voxels[g.index(x, y, z)];
  return out;
}

// HD95 of two nonempty masks given as compact arrays over the same box.
// Cropping to the joint bounding box is exact: every foreground voxel
// of both masks lies inside, so nearest-neighbor distances are
// unchanged.
double hd95_arrays(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                   const std::array<std::int64_t, 3>& dims,
                   const std::array<double, 3>& spacing) {
  std::vector<double> pooled;
  {
    const std::vector<double> dist_to_b = squared_distance_transform(b.data(), dims, spacing);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]) pooled.push_back(std::sqrt(dist_to_b[i]));
  }
  {
    const std::vector<double> dist_to_a = squared_distance_transform(a.data(), dims, spacing);
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i]) pooled.push_back(std::sqrt(dist_to_a[i]));
  }
  return percentile(std::move(pooled), 95.0);
}

double hd95_boxed(const BinaryMask& pred, const BinaryMask& gt, const Box& pred_box,
                  const Box& gt_box, double empty_penalty_mm) {
  const bool p_empty = pred_box.empty();
  const bool g_empty = gt_box.empty();
  if (p_empty && g_empty) return 0.0;
  if (p_empty || g_empty) return empty_penalty_mm;
  Box joint = pred_box;
  joint.merge(gt_box);
  const auto a = crop_mask(pred.voxels.data(), pred.geometry, joint);
  const auto b = crop_mask(gt.voxels.data(), gt.geometry, joint);
  return hd95_arrays(a, b, joint.extents(), pred.geometry.spacing);
}

}  // namespace

double hd95(const BinaryMask& pred, const BinaryMask& gt, double empty_penalty_mm) {
  require_same_grid(pred.geometry, gt.geometry, "hd95");
  const Box pred_box = mask_bbox(pred.voxels.data(), pred.geometry);
  const Box gt_box = mask_bbox(gt.voxels.data(), gt.geometry);
  return hd95_boxed(pred, gt, pred_box, gt_box, empty_penalty_mm);
}

namespace {

struct GtPartition {
  ComponentLabeling cc;                    // raw gt components
  std::vector<std::int32_t> lesion_of_comp;  // comp id (1-based) -> lesion id, 0 = discarded
  std::int32_t n_lesions = 0;
  std::vector<std::int64_t> lesion_sizes;       // undilated voxel counts
  std::vector<std::int32_t> dilated_owner;      // per voxel: lesion id whose dilation covers it
};

struct CompUnionFind {
  std::vector<std::int32_t> parent;
  explicit CompUnionFind(std::int32_t n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

// Components whose radius-r dilations share a voxel end up in one
// lesion (transitively). Each component is dilated only inside its
// grown bounding box; a global owner map detects intersections.
GtPartition partition_gt(const BinaryMask& gt, const LesionwiseParams& params) {
  GtPartition part;
  part.cc = connected_components(gt, params.connectivity);
  const auto& g = gt.geometry;
  const std::int32_t n_comp = static_cast<std::int32_t>(part.cc.count());
  part.dilated_owner.assign(gt.voxels.size(), 0);
  part.lesion_of_comp.assign(static_cast<std::size_t>(n_comp) + 1, 0);
  if (n_comp == 0) return part;

  std::vector<Box> comp_box(static_cast<std::size_t>(n_comp) + 1);
  {
    std::int64_t idx = 0;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx) {
          const std::uint32_t k = part.cc.ids[static_cast<std::size_t>(idx)];
          if (k) comp_box[k].include(x, y, z);
        }
  }

  const int r = params.match_dilation_radius;
  CompUnionFind uf(n_comp + 1);
  std::vector<std::int32_t> owner(gt.voxels.size(), 0);
  for (std::int32_t k = 1; k <= n_comp; ++k) {
    Box grown = comp_box[static_cast<std::size_t>(k)];
    for (int a = 0; a < 3; ++a) {
      grown.lo[a] = std::max<std::int64_t>(0, grown.lo[a] - r);
      grown.hi[a] = std::min(g.dims[a] - 1, grown.hi[a] + r);
    }
    const auto ext = grown.extents();
    // mask of component k inside the grown box, then dilated
    VolumeGeometry local = make_geometry(ext, g.spacing);
    BinaryMask local_mask(local);
    std::size_t o = 0;
    for (std::int64_t z = grown.lo[2]; z <= grown.hi[2]; ++z)
      for (std::int64_t y = grown.lo[1]; y <= grown.hi[1]; ++y)
        for (std::int64_t x = grown.lo[0]; x <= grown.hi[0]; ++x, ++o)
          local_mask.voxels[o] = part.cc.ids[static_cast<std::size_t>(g.index(x, y, z))] ==
                                 static_cast<std::uint32_t>(k);
    const BinaryMask dilated = dilate(local_mask, r);
    o = 0;
    for (std::int64_t z = grown.lo[2]; z <= grown.hi[2]; ++z)
      for (std::int64_t y = grown.lo[1]; y <= grown.hi[1]; ++y)
        for (std::int64_t x = grown.lo[0]; x <= grown.hi[0]; ++x, ++o) {
          if (!dilated.voxels[o]) continue;
          std::int32_t& cell = owner[static_cast<std::size_t>(g.index(x, y, z))];
          if (cell == 0)
            cell = k;
          else
            uf.unite(cell, k);
        }
  }

  // Lesion ids in order of each group's smallest component id.
  std::vector<std::int64_t> group_size(static_cast<std::size_t>(n_comp) + 1, 0);
  for (std::int32_t k = 1; k <= n_comp; ++k)
    group_size[static_cast<std::size_t>(uf.find(k))] += part.cc.sizes[static_cast<std::size_t>(k - 1)];
  for (std::int32_t k = 1; k <= n_comp; ++k) {
    const std::int32_t root = uf.find(k);
    if (root != k) continue;
    if (group_size[static_cast<std::size_t>(root)] < params.min_gt_lesion_size) continue;
    part.lesion_of_comp[static_cast<std::size_t>(root)] = ++part.n_lesions;
    part.lesion_sizes.push_back(group_size[static_cast<std::size_t>(root)]);
  }
  for (std::int32_t k = 1; k <= n_comp; ++k)
    part.lesion_of_comp[static_cast<std::size_t>(k)] =
        part.lesion_of_comp[static_cast<std::size_t>(uf.find(k))];

  for (std::size_t i = 0; i < owner.size(); ++i)
    if (owner[i]) part.dilated_owner[i] = part.lesion_of_comp[static_cast<std::size_t>(owner[i])];
  return part;
}

}  // namespace

std::vector<BinaryMask> lesion_partition(const BinaryMask& gt, const LesionwiseParams& params) {
  params.validate();
  const GtPartition part = partition_gt(gt, params);
  std::vector<BinaryMask> out;
  out.reserve(static_cast<std::size_t>(part.n_lesions));
  for (std::int32_t l = 1; l <= part.n_lesions; ++l) out.emplace_back(gt.geometry);
  for (std::size_t i = 0; i < gt.voxels.size(); ++i) {
    const std::uint32_t k = part.cc.ids[i];
    if (!k) continue;
    const std::int32_t l = part.lesion_of_comp[k];
    if (l) out[static_cast<std::size_t>(l - 1)].voxels[i] = 1;
  }
  return out;
}

RegionScores lesionwise_scores(const BinaryMask& pred, const BinaryMask& gt,
                               const LesionwiseParams& params) {
  require_same_grid(pred.geometry, gt.geometry, "lesionwise_scores");
  params.validate();
  RegionScores scores;
  const VolumeGeometry& g = gt.geometry;

  const GtPartition part = partition_gt(gt, params);
  const ComponentLabeling pred_cc = connected_components(pred, params.connectivity);
  const std::uint32_t n_pred = pred_cc.count();
  scores.n_lesions = part.n_lesions;

  if (part.n_lesions == 0 && n_pred == 0) {
    // vacuously correct case
    LesionEntry entry;
    entry.dice_value = 1.0;
    entry.hd95_mm = 0.0;
    scores.entries.push_back(entry);
    scores.lw_dice = 1.0;
    scores.lw_hd95_mm = 0.0;
    return scores;
  }

  // Overlap of every pred component with every dilated lesion.
  std::vector<std::map<std::int32_t, std::int64_t>> overlap(n_pred + 1);
  for (std::size_t i = 0; i < pred.voxels.size(); ++i) {
    const std::uint32_t pc = pred_cc.ids[i];
    if (!pc) continue;
    const std::int32_t lesion = part.dilated_owner[i];
    if (lesion) ++overlap[pc][lesion];
  }

  // Assign: most overlap wins, then the lower lesion id.
  std::vector<std::int32_t> assigned(n_pred + 1, 0);
  for (std::uint32_t pc = 1; pc <= n_pred; ++pc) {
    std::int64_t best = 0;
    for (const auto& [lesion, count] : overlap[pc]) {
      if (count > best) {
        best = count;
        assigned[pc] = lesion;
      }
    }
  }

  // Per-voxel lesion id and per-lesion matched-pred mask are implicit;
  // gather counts and boxes in one sweep.
  const std::int32_t n_lesions = part.n_lesions;
  std::vector<Box> lesion_box(static_cast<std::size_t>(n_lesions) + 1);
  std::vector<Box> matched_box(static_cast<std::size_t>(n_lesions) + 1);
  std::vector<std::int64_t> matched_voxels(static_cast<std::size_t>(n_lesions) + 1, 0);
  {
    std::int64_t idx = 0;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
      for (std::int64_t y = 0; y < g.dims[1]; ++y)
        for (std::int64_t x = 0; x < g.dims[0]; ++x, ++idx) {
          const std::uint32_t k = part.cc.ids[static_cast<std::size_t>(idx)];
          if (k) {
            const std::int32_t l = part.lesion_of_comp[k];
            if (l) lesion_box[static_cast<std::size_t>(l)].include(x, y, z);
          }
          const std::uint32_t pc = pred_cc.ids[static_cast<std::size_t>(idx)];
          if (pc && assigned[pc]) {
            matched_box[static_cast<std::size_t>(assigned[pc])].include(x, y, z);
            ++matched_voxels[static_cast<std::size_t>(assigned[pc])];
          }
        }
  }

  for (std::int32_t l = 1; l <= n_lesions; ++l) {
    LesionEntry entry;
    entry.gt_lesion_id = l;
    entry.gt_voxels = part.lesion_sizes[static_cast<std::size_t>(l - 1)];
    entry.pred_voxels = matched_voxels[static_cast<std::size_t>(l)];
    for (std::uint32_t pc = 1; pc <= n_pred; ++pc)
      if (assigned[pc] == l) entry.pred_component_ids.push_back(pc);

    if (entry.pred_voxels == 0) {
      entry.dice_value = 0.0;
      entry.hd95_mm = params.fp_hd95_mm;
    } else {
      Box joint = lesion_box[static_cast<std::size_t>(l)];
      joint.merge(matched_box[static_cast<std::size_t>(l)]);
      const auto ext = joint.extents();
      std::vector<std::uint8_t> lesion_crop(static_cast<std::size_t>(ext[0] * ext[1] * ext[2]), 0);
      std::vector<std::uint8_t> pred_crop(lesion_crop.size(), 0);
      std::int64_t inter = 0;
      std::size_t o = 0;
      for (std::int64_t z = joint.lo[2]; z <= joint.hi[2]; ++z)
        for (std::int64_t y = joint.lo[1]; y <= joint.hi[1]; ++y)
          for (std::int64_t x = joint.lo[0]; x <= joint.hi[0]; ++x, ++o) {
            const std::int64_t idx = g.index(x, y, z);
            const std::uint32_t k = part.cc.ids[static_cast<std::size_t>(idx)];
            const bool in_lesion = k && part.lesion_of_comp[k] == l;
            const std::uint32_t pc = pred_cc.ids[static_cast<std::size_t>(idx)];
            const bool in_pred = pc && assigned[pc] == l;
            lesion_crop[o] = in_lesion;
            pred_crop[o] = in_pred;
            inter += in_lesion && in_pred;
          }
      entry.dice_value = 2.0 * static_cast<double>(inter) /
                         static_cast<double>(entry.gt_voxels + entry.pred_voxels);
      entry.hd95_mm = hd95_arrays(pred_crop, lesion_crop, ext, g.spacing);
    }
    scores.entries.push_back(std::move(entry));
  }

  for (std::uint32_t pc = 1; pc <= n_pred; ++pc) {
    if (assigned[pc]) continue;
    LesionEntry entry;
    entry.false_positive = true;
    entry.pred_component_ids.push_back(pc);
    entry.pred_voxels = pred_cc.sizes[pc - 1];
    entry.dice_value = params.fp_dice;
    entry.hd95_mm = params.fp_hd95_mm;
    scores.entries.push_back(std::move(entry));
    ++scores.n_fp;
  }

  double dice_sum = 0.0, hd_sum = 0.0;
  for (const LesionEntry& e : scores.entries) {
    dice_sum += e.dice_value;
    hd_sum += e.hd95_mm;
  }
  const double n_entries = static_cast<double>(scores.entries.size());
  scores.lw_dice = dice_sum / n_entries;
  scores.lw_hd95_mm = hd_sum / n_entries;
  return scores;
}

CaseReport evaluate_case(const LabelVolume& pred, const LabelVolume& gt,
                         const LesionwiseParams& params, const std::string& case_id) {
  require_same_grid(pred.geometry, gt.geometry, "evaluate_case");
  CaseReport report;
  report.case_id = case_id;
  for (Region r : kAllRegions) {
    const BinaryMask pm = region_mask(pred, r);
    const BinaryMask gm = region_mask(gt, r);
    RegionScores s = lesionwise_scores(pm, gm, params);
    s.volume_dice = dice(pm, gm);
    s.volume_hd95_mm = hd95(pm, gm, params.fp_hd95_mm);
    report.region(r) = std::move(s);
  }
  return report;
}

}  // namespace segkit
