#pragma once

#include "segkit/volume.hpp"

namespace segkit {

// Region algebra over label codes: ET = {3}, TC = {1,3}, WT = {1,2,3}.
bool label_in_region(std::uint8_t code, Region r);
BinaryMask region_mask(const LabelVolume& volume, Region r);

// Collapse a 4-channel softmax into nested region probabilities:
// P(ET) = p_et, P(TC) = p_et + p_ncr, P(WT) = p_et + p_ncr + p_ed.
RegionProbVolume label_probs_to_region_probs(const LabelProbVolume& p);

// Hierarchical decode: the WT gate is tested first, the TC gate only
// inside WT, the ET gate only inside TC, so the decoded labels always
// satisfy ET subset TC subset WT. Thresholds must lie in (0,1).
LabelVolume decode_labels(const RegionProbVolume& p, double t_wt = 0.5, double t_tc = 0.5,
                          double t_et = 0.5);

// {0,1}-valued region probabilities of a label volume. decode_labels on
// the result (defaults) reproduces the input exactly.
RegionProbVolume region_indicators(const LabelVolume& volume);

}  // namespace segkit
