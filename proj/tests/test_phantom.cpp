#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "segkit/errors.hpp"
#include "segkit/metrics.hpp"
#include "segkit/phantom.hpp"
#include "segkit/postprocess.hpp"
#include "segkit/regions.hpp"

using namespace segkit;

TEST_CASE("clean phantom: pred equals gt and scores perfectly") {
  PhantomSpec spec;
  spec.n_lesions = 2;
  spec.seed = 5;
  const PhantomOutput out = generate_phantom(spec);
  CHECK(out.pred.voxels == out.gt.voxels);
  const CaseReport report = evaluate_case(out.pred, out.gt, LesionwiseParams{}, "clean");
  for (Region r : kAllRegions) CHECK(report.region(r).lw_dice == 1.0);
}

TEST_CASE("same seed twice is bit-identical, different seed differs") {
  PhantomSpec spec;
  spec.n_lesions = 2;
  spec.n_spurious = 2;
  spec.label_noise_rate = 0.3;
  spec.prob_blur_radius = 1;
  spec.seed = 77;
  const PhantomOutput a = generate_phantom(spec);
  const PhantomOutput b = generate_phantom(spec);
  CHECK(a.gt.voxels == b.gt.voxels);
  CHECK(a.pred.voxels == b.pred.voxels);
  for (int c = 0; c < 3; ++c) CHECK(a.probs.channels[c] == b.probs.channels[c]);
  CHECK(phantom_manifest_json(spec, a) == phantom_manifest_json(spec, b));
  spec.seed = 78;
  const PhantomOutput c = generate_phantom(spec);
  CHECK(a.gt.voxels != c.gt.voxels);
}

TEST_CASE("manifest reports exact planted sizes; filtering them restores gt support") {
  PhantomSpec spec;
  spec.n_lesions = 1;
  spec.n_spurious = 1;
  spec.spurious_size_range = {5, 5};
  spec.seed = 13;
  const PhantomOutput out = generate_phantom(spec);
  REQUIRE(out.spurious.size() == 1);
  CHECK(out.spurious[0].size == 5);
  const std::string manifest = phantom_manifest_json(spec, out);
  CHECK(manifest.find("\"size\": 5") != std::string::npos);

  const LabelVolume filtered = filter_small_components(out.pred, 6, Connectivity::c26);
  const BinaryMask fg_filtered = region_mask(filtered, Region::WT);
  const BinaryMask fg_gt = region_mask(out.gt, Region::WT);
  CHECK(fg_filtered.voxels == fg_gt.voxels);
}

TEST_CASE("gt satisfies region nesting and has one WT component per lesion") {
  for (int n : {1, 3, 5}) {
    PhantomSpec spec;
    spec.dims = {96, 96, 96};
    spec.n_lesions = n;
    spec.seed = static_cast<std::uint64_t>(100 + n);
    const PhantomOutput out = generate_phantom(spec);
    const BinaryMask et = region_mask(out.gt, Region::ET);
    const BinaryMask tc = region_mask(out.gt, Region::TC);
    const BinaryMask wt = region_mask(out.gt, Region::WT);
    for (std::size_t i = 0; i < et.voxels.size(); ++i) {
      CHECK(et.voxels[i] <= tc.voxels[i]);
      CHECK(tc.voxels[i] <= wt.voxels[i]);
    }
    CHECK(connected_components(wt, Connectivity::c26).count() == static_cast<std::uint32_t>(n));
  }
}

TEST_CASE("manifest voxel counts match the rasterized volume") {
  PhantomSpec spec;
  spec.n_lesions = 1;
  spec.seed = 31;
  const PhantomOutput out = generate_phantom(spec);
  REQUIRE(out.lesions.size() == 1);
  CHECK(out.lesions[0].wt_voxels == region_mask(out.gt, Region::WT).count_true());
  CHECK(out.lesions[0].tc_voxels == region_mask(out.gt, Region::TC).count_true());
  CHECK(out.lesions[0].et_voxels == region_mask(out.gt, Region::ET).count_true());
}

TEST_CASE("probabilities decode back to pred at blur radius 0") {
  PhantomSpec spec;
  spec.n_lesions = 2;
  spec.n_spurious = 1;
  spec.label_noise_rate = 0.2;
  spec.seed = 12;
  const PhantomOutput out = generate_phantom(spec);
  const LabelVolume decoded = decode_labels(out.probs);
  CHECK(decoded.voxels == out.pred.voxels);
}

TEST_CASE("blurred probabilities keep region nesting and stay in [0,1]") {
  PhantomSpec spec;
  spec.n_lesions = 1;
  spec.prob_blur_radius = 2;
  spec.seed = 9;
  const PhantomOutput out = generate_phantom(spec);
  const auto& et = out.probs.channel(Region::ET);
  const auto& tc = out.probs.channel(Region::TC);
  const auto& wt = out.probs.channel(Region::WT);
  for (std::size_t i = 0; i < et.size(); ++i) {
    CHECK(et[i] >= 0.0f);
    CHECK(wt[i] <= 1.0f);
    CHECK(et[i] <= tc[i] + 1e-6f);
    CHECK(tc[i] <= wt[i] + 1e-6f);
  }
}

TEST_CASE("label noise only swaps foreground labels: WT mask is invariant") {
  PhantomSpec spec;
  spec.n_lesions = 2;
  spec.label_noise_rate = 0.5;
  spec.seed = 40;
  const PhantomOutput noisy = generate_phantom(spec);
  PhantomSpec clean = spec;
  clean.label_noise_rate = 0.0;
  const PhantomOutput base = generate_phantom(clean);
  CHECK(noisy.pred.voxels != base.pred.voxels);  // noise did something
  CHECK(region_mask(noisy.pred, Region::WT).voxels == region_mask(base.pred, Region::WT).voxels);
}

TEST_CASE("infeasible specs are rejected") {
  PhantomSpec spec;
  spec.dims = {32, 32, 32};
  spec.wt_radius_range = {20.0, 25.0};  // cell larger than the volume
  CHECK_THROWS_AS(generate_phantom(spec), Error);
  PhantomSpec crowded;
  crowded.dims = {64, 64, 64};
  crowded.n_lesions = 100;
  CHECK_THROWS_AS(generate_phantom(crowded), Error);
  PhantomSpec bad;
  bad.label_noise_rate = 1.5;
  CHECK_THROWS_AS(generate_phantom(bad), Error);
}

TEST_CASE("spurious components never touch lesions even after dilation") {
  PhantomSpec spec;
  spec.dims = {96, 96, 96};
  spec.n_lesions = 3;
  spec.n_spurious = 4;
  spec.seed = 55;
  const PhantomOutput out = generate_phantom(spec);
  // removing components smaller than the smallest lesion must leave
  // exactly the gt foreground: blobs are disjoint islands
  const LabelVolume filtered = filter_small_components(out.pred, 12, Connectivity::c26);
  CHECK(region_mask(filtered, Region::WT).voxels == region_mask(out.gt, Region::WT).voxels);
  // and the gt lesion count survives a radius-3 dilation matching pass
  LesionwiseParams params;
  const auto lesions = lesion_partition(region_mask(out.gt, Region::WT), params);
  CHECK(lesions.size() == 3);
}
