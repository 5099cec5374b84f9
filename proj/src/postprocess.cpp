#include "segkit/postprocess.hpp"

#include <algorithm>
#include <string>

#include "segkit/errors.hpp"
#include "segkit/regions.hpp"

namespace segkit {

namespace {

// Region containment order under nesting: ET <= TC <= WT.
bool region_subset(Region inner, Region outer) {
  return static_cast<int>(inner) <= static_cast<int>(outer);
}

BinaryMask foreground_mask(const LabelVolume& volume) {
  BinaryMask mask(volume.geometry);
  for (std::size_t i = 0; i < volume.voxels.size(); ++i)
    mask.voxels[i] = volume.voxels[i] != labels::kBackground;
  return mask;
}

BinaryMask label_mask(const LabelVolume& volume, std::uint8_t code) {
  BinaryMask mask(volume.geometry);
  for (std::size_t i = 0; i < volume.voxels.size(); ++i)
    mask.voxels[i] = volume.voxels[i] == code;
  return mask;
}

void clear_small(LabelVolume& volume, const BinaryMask& mask, std::int64_t min_size,
                 Connectivity connectivity) {
  const ComponentLabeling cc = connected_components(mask, connectivity);
  std::vector<std::uint8_t> drop(cc.sizes.size() + 1, 0);
  for (std::uint32_t k = 1; k <= cc.count(); ++k)
    drop[k] = cc.sizes[k - 1] < min_size;
  for (std::size_t i = 0; i < volume.voxels.size(); ++i)
    if (drop[cc.ids[i]]) volume.voxels[i] = labels::kBackground;
}

}  // namespace

std::string MaskSelector::name() const {
  if (kind == Kind::region) return to_string(region);
  switch (label) {
    case labels::kBackground: return "BG";
    case labels::kNcr: return "NCR";
    case labels::kEd: return "ED";
    case labels::kEt: return "ET";
  }
  return "label" + std::to_string(static_cast<int>(label));
}

MaskSelector selector_from_string(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "ET" || up == "TC" || up == "WT") return MaskSelector::of_region(region_from_string(up));
  if (up == "NCR") return MaskSelector::of_label(labels::kNcr);
  if (up == "ED" || up == "SNFH") return MaskSelector::of_label(labels::kEd);
  throw Error::config("unknown mask selector '" + name + "' (expected ET, TC, WT, NCR or ED)");
}

void RatioRule::validate() const {
  const bool contained = numerator.kind == MaskSelector::Kind::region
                             ? region_subset(numerator.region, denominator)
                             : label_in_region(numerator.label, denominator);
  if (!contained)
    throw Error::config("ratio rule: numerator " + numerator.name() +
                        " is not contained in denominator region " + to_string(denominator));
  if (source_label == target_label)
    throw Error::config("ratio rule: source and target label must differ");
  if (source_label > 3 || target_label > 3)
    throw Error::config("ratio rule: label codes must lie in {0,1,2,3}");
  if (threshold < 0.0 || threshold > 1.0)
    throw Error::config("ratio rule: threshold must lie in [0,1]");
}

PostprocessConfig PostprocessConfig::preset(std::string_view task) {
  PostprocessConfig cfg;
  if (task == "ped") {
    cfg.min_component_size = 130;
    cfg.rules.push_back(
        {MaskSelector::of_region(Region::ET), Region::WT, 0.04, labels::kEt, labels::kNcr});
    cfg.rules.push_back(
        {MaskSelector::of_label(labels::kEd), Region::WT, 1.00, labels::kEd, labels::kNcr});
  } else if (task == "men") {
    cfg.min_component_size = 110;
  } else if (task == "met") {
    cfg.min_component_size = 15;
  } else {
    throw Error::config("unknown postprocess preset '" + std::string(task) +
                        "' (expected ped, men or met)");
  }
  return cfg;
}

void PostprocessConfig::validate() const {
  if (min_component_size < 0) throw Error::config("min_component_size must be >= 0");
  for (const RatioRule& r : rules) r.validate();
}

LabelVolume filter_small_components(const LabelVolume& volume, std::int64_t min_size,
                                    Connectivity connectivity, ComponentFilterScope scope) {
  LabelVolume out = volume;
  if (min_size <= 0) return out;
  if (scope == ComponentFilterScope::combined_foreground) {
    clear_small(out, foreground_mask(volume), min_size, connectivity);
  } else {
    for (std::uint8_t code : {labels::kNcr, labels::kEd, labels::kEt})
      clear_small(out, label_mask(volume, code), min_size, connectivity);
  }
  return out;
}

LabelVolume ratio_relabel(const LabelVolume& volume, std::span<const RatioRule> rules) {
  LabelVolume out = volume;
  for (const RatioRule& rule : rules) {
    rule.validate();
    std::int64_t num = 0, den = 0;
    const bool num_is_region = rule.numerator.kind == MaskSelector::Kind::region;
    for (std::uint8_t code : out.voxels) {
      if (code == labels::kBackground) continue;
      num += num_is_region ? label_in_region(code, rule.numerator.region)
                           : (code == rule.numerator.label);
      den += label_in_region(code, rule.denominator);
    }
    if (den == 0) continue;
    const double ratio = static_cast<double>(num) / static_cast<double>(den);
    if (ratio < rule.threshold) {
      for (std::uint8_t& code : out.voxels)
        if (code == rule.source_label) code = rule.target_label;
    }
  }
  return out;
}

LabelVolume postprocess(const LabelVolume& volume, const PostprocessConfig& config) {
  config.validate();
  LabelVolume out =
      filter_small_components(volume, config.min_component_size, config.connectivity, config.scope);
  return ratio_relabel(out, config.rules);
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw Error::config("dilate: radius must be >= 0");
  if (radius == 0) return mask;

  // The cubic structuring element is separable: one sliding-window OR
  // per axis, each done as a forward scan (trues behind) plus a
  // backward scan (trues ahead).
  const auto& g = mask.geometry;
  BinaryMask cur = mask;
  BinaryMask next(g);

  auto pass = [&](int axis) {
    const std::int64_t extent = g.dims[axis];
    std::int64_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= g.dims[a];
    const std::int64_t lines = g.voxel_count() / extent;
    for (std::int64_t line = 0; line < lines; ++line) {
      // base linear index of this line (coordinates of the other two axes)
      std::int64_t rem = line, base = 0, mul = 1;
      for (int a = 0; a < 3; ++a) {
        if (a == axis) {
          mul *= g.dims[a];
          continue;
        }
        base += (rem % g.dims[a]) * mul;
        rem /= g.dims[a];
        mul *= g.dims[a];
      }
      std::int64_t last_true = -(radius + 1);
      for (std::int64_t i = 0; i < extent; ++i) {
        if (cur.voxels[static_cast<std::size_t>(base + i * stride)]) last_true = i;
        next.voxels[static_cast<std::size_t>(base + i * stride)] = (i - last_true) <= radius;
      }
      last_true = extent + radius;
      for (std::int64_t i = extent - 1; i >= 0; --i) {
        if (cur.voxels[static_cast<std::size_t>(base + i * stride)]) last_true = i;
        if ((last_true - i) <= radius) next.voxels[static_cast<std::size_t>(base + i * stride)] = 1;
      }
    }
    std::swap(cur.voxels, next.voxels);
  };

  pass(0);
  pass(1);
  pass(2);
  return cur;
}

}  // namespace segkit
