#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "segkit/components.hpp"
#include "segkit/volume.hpp"

namespace segkit {

// Numerator of a ratio rule: either a nested region (ET/TC/WT) or a
// single label code. The ED/WT rule needs the latter, since ED is a
// label with no region of its own.
struct MaskSelector {
  enum class Kind { region, label };
  Kind kind = Kind::region;
  Region region = Region::ET;
  std::uint8_t label = labels::kEt;

  static MaskSelector of_region(Region r) { return {Kind::region, r, 0}; }
  static MaskSelector of_label(std::uint8_t code) { return {Kind::label, Region::ET, code}; }
  std::string name() const;
};

// "ED" / "NCR" / "ET" / "TC" / "WT"; region names win over label names
MaskSelector selector_from_string(const std::string& name);

// Rewrites every `source_label` voxel to `target_label` when
// |numerator| / |denominator region| < threshold. The rule is skipped
// when the denominator region is empty.
struct RatioRule {
  MaskSelector numerator = MaskSelector::of_region(Region::ET);
  Region denominator = Region::WT;
  double threshold = 0.0;
  std::uint8_t source_label = labels::kEt;
  std::uint8_t target_label = labels::kNcr;

  void validate() const;  // numerator contained in denominator, source != target
};

// Which foreground the size filter labels into components: the whole
// nonzero mask at once, or each label code separately.
enum class ComponentFilterScope { combined_foreground, per_label };

struct PostprocessConfig {
  std::int64_t min_component_size = 0;
  Connectivity connectivity = Connectivity::c26;
  ComponentFilterScope scope = ComponentFilterScope::combined_foreground;
  std::vector<RatioRule> rules;  // applied in order, after the size filter

  // "ped": min size 130, ET/WT < 0.04 -> NCR, ED/WT < 1.00 -> NCR.
  // "men": min size 110. "met": min size 15.
  static PostprocessConfig preset(std::string_view task);
  void validate() const;
};

// Components smaller than min_size voxels are cleared to background;
// label codes inside surviving components are untouched.
LabelVolume filter_small_components(const LabelVolume& volume, std::int64_t min_size,
                                    Connectivity connectivity,
                                    ComponentFilterScope scope = ComponentFilterScope::combined_foreground);

// Rules run in order and each one sees the volume as mutated by its
// predecessors.
LabelVolume ratio_relabel(const LabelVolume& volume, std::span<const RatioRule> rules);

// Size filter, then ratio rules.
LabelVolume postprocess(const LabelVolume& volume, const PostprocessConfig& config);

// Chebyshev dilation: output true iff an input-true voxel lies within
// Chebyshev distance <= radius (cubic structuring element).
BinaryMask dilate(const BinaryMask& mask, int radius);

}  // namespace segkit
