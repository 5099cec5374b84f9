#include "segkit/regions.hpp"

#include <algorithm>

#include "segkit/errors.hpp"

namespace segkit {

bool label_in_region(std::uint8_t code, Region r) {
  switch (r) {
    case Region::ET: return code == labels::kEt;
    case Region::TC: return code == labels::kEt || code == labels::kNcr;
    case Region::WT: return code != labels::kBackground;
  }
  return false;
}

BinaryMask region_mask(const LabelVolume& volume, Region r) {
  BinaryMask mask(volume.geometry);
  const std::size_t n = volume.voxels.size();
  for (std::size_t i = 0; i < n; ++i)
    mask.voxels[i] = label_in_region(volume.voxels[i], r) ? 1 : 0;
  return mask;
}

RegionProbVolume label_probs_to_region_probs(const LabelProbVolume& p) {
  RegionProbVolume out(p.geometry);
  const auto& ncr = p.channels[labels::kNcr];
  const auto& ed = p.channels[labels::kEd];
  const auto& et = p.channels[labels::kEt];
  const std::size_t n = et.size();
  auto clamp01 = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  for (std::size_t i = 0; i < n; ++i) {
    out.channel(Region::ET)[i] = clamp01(et[i]);
    out.channel(Region::TC)[i] = clamp01(et[i] + ncr[i]);
    out.channel(Region::WT)[i] = clamp01(et[i] + ncr[i] + ed[i]);
  }
  return out;
}

LabelVolume decode_labels(const RegionProbVolume& p, double t_wt, double t_tc, double t_et) {
  for (double t : {t_wt, t_tc, t_et})
    if (!(t > 0.0 && t < 1.0))
      throw Error::config("decode thresholds must lie strictly inside (0,1)");
  LabelVolume out(p.geometry);
  const auto& et = p.channel(Region::ET);
  const auto& tc = p.channel(Region::TC);
  const auto& wt = p.channel(Region::WT);
  const std::size_t n = out.voxels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(wt[i] > t_wt)) continue;  // background
    if (!(tc[i] > t_tc)) {
      out.voxels[i] = labels::kEd;
    } else if (et[i] > t_et) {
      out.voxels[i] = labels::kEt;
    } else {
      out.voxels[i] = labels::kNcr;
    }
  }
  return out;
}

RegionProbVolume region_indicators(const LabelVolume& volume) {
  RegionProbVolume out(volume.geometry);
  const std::size_t n = volume.voxels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t code = volume.voxels[i];
    for (Region r : kAllRegions)
      out.channels[static_cast<int>(r)][i] = label_in_region(code, r) ? 1.0f : 0.0f;
  }
  return out;
}

}  // namespace segkit
