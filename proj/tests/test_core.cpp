#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "segkit/errors.hpp"
#include "segkit/regions.hpp"

using namespace segkit;

namespace {

LabelVolume single_voxel_volume(std::uint8_t code) {
  LabelVolume v(make_geometry({3, 3, 3}));
  v.at(1, 1, 1) = code;
  return v;
}

}  // namespace

TEST_CASE("region_mask: all-background volume has empty WT mask") {
  LabelVolume v(make_geometry({4, 4, 4}));
  CHECK(region_mask(v, Region::WT).count_true() == 0);
}

TEST_CASE("region_mask: TC includes an ET-labeled voxel") {
  const LabelVolume v = single_voxel_volume(labels::kEt);
  const BinaryMask tc = region_mask(v, Region::TC);
  CHECK(tc.count_true() == 1);
  CHECK(tc.at(1, 1, 1) == 1);
}

TEST_CASE("region_mask: WT covers all three labels, TC only codes 1 and 3") {
  LabelVolume v(make_geometry({3, 1, 1}));
  v.at(0, 0, 0) = labels::kNcr;
  v.at(1, 0, 0) = labels::kEd;
  v.at(2, 0, 0) = labels::kEt;
  const BinaryMask wt = region_mask(v, Region::WT);
  CHECK(wt.count_true() == 3);
  const BinaryMask tc = region_mask(v, Region::TC);
  CHECK(tc.count_true() == 2);
  CHECK(tc.at(0, 0, 0) == 1);
  CHECK(tc.at(1, 0, 0) == 0);
  CHECK(tc.at(2, 0, 0) == 1);
  CHECK(region_mask(v, Region::ET).count_true() == 1);
}

TEST_CASE("label_probs_to_region_probs: hand-checked voxels") {
  LabelProbVolume p(make_geometry({3, 1, 1}));
  // voxel 0: pure background; voxel 1: pure ET; voxel 2: mixed
  p.channels[0] = {1.0f, 0.0f, 0.1f};
  p.channels[1] = {0.0f, 0.0f, 0.2f};
  p.channels[2] = {0.0f, 0.0f, 0.3f};
  p.channels[3] = {0.0f, 1.0f, 0.4f};
  const RegionProbVolume r = label_probs_to_region_probs(p);
  CHECK(r.channel(Region::ET)[0] == doctest::Approx(0.0));
  CHECK(r.channel(Region::TC)[0] == doctest::Approx(0.0));
  CHECK(r.channel(Region::WT)[0] == doctest::Approx(0.0));
  CHECK(r.channel(Region::ET)[1] == doctest::Approx(1.0));
  CHECK(r.channel(Region::TC)[1] == doctest::Approx(1.0));
  CHECK(r.channel(Region::WT)[1] == doctest::Approx(1.0));
  CHECK(r.channel(Region::ET)[2] == doctest::Approx(0.4));
  CHECK(r.channel(Region::TC)[2] == doctest::Approx(0.6));
  CHECK(r.channel(Region::WT)[2] == doctest::Approx(0.9));
}

TEST_CASE("decode_labels: hierarchical gating") {
  RegionProbVolume p(make_geometry({3, 1, 1}));
  // (ET, TC, WT) per voxel
  p.channel(Region::ET) = {0.9f, 0.1f, 0.9f};
  p.channel(Region::TC) = {0.9f, 0.9f, 0.1f};
  p.channel(Region::WT) = {0.9f, 0.9f, 0.9f};
  const LabelVolume v = decode_labels(p);
  CHECK(v.voxels[0] == labels::kEt);
  CHECK(v.voxels[1] == labels::kNcr);
  // ET gate is confident but TC failed, so the voxel decodes as ED
  CHECK(v.voxels[2] == labels::kEd);
}

TEST_CASE("decode_labels: thresholds outside (0,1) are a config error") {
  RegionProbVolume p(make_geometry({1, 1, 1}));
  CHECK_THROWS_AS(decode_labels(p, 0.0, 0.5, 0.5), Error);
  CHECK_THROWS_AS(decode_labels(p, 0.5, 1.0, 0.5), Error);
  CHECK_THROWS_AS(decode_labels(p, 0.5, 0.5, -0.1), Error);
}

TEST_CASE("nesting invariant: ET within TC within WT on random volumes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LabelVolume v = oracles::random_labels({9, 7, 8}, seed);
    const BinaryMask et = region_mask(v, Region::ET);
    const BinaryMask tc = region_mask(v, Region::TC);
    const BinaryMask wt = region_mask(v, Region::WT);
    for (std::size_t i = 0; i < v.voxels.size(); ++i) {
      CHECK(et.voxels[i] <= tc.voxels[i]);
      CHECK(tc.voxels[i] <= wt.voxels[i]);
    }
  }
}

TEST_CASE("round trip: decode of region indicators reproduces the volume") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const LabelVolume v = oracles::random_labels({8, 8, 8}, seed, 1);
    const LabelVolume back = decode_labels(region_indicators(v));
    CHECK(back.voxels == v.voxels);
  }
}

TEST_CASE("label_probs_to_region_probs is monotone in p_ET") {
  CounterRng rng(99, 0);
  for (int rep = 0; rep < 200; ++rep) {
    // random softmax voxel
    double raw[4];
    double total = 0.0;
    for (double& r : raw) {
      r = rng.next_double() + 1e-6;
      total += r;
    }
    LabelProbVolume p(make_geometry({1, 1, 1}));
    for (int c = 0; c < 4; ++c) p.channels[c][0] = static_cast<float>(raw[c] / total);
    // rebalance some background mass into ET
    const float delta = p.channels[0][0] * 0.5f;
    LabelProbVolume q = p;
    q.channels[0][0] -= delta;
    q.channels[3][0] += delta;
    const RegionProbVolume rp = label_probs_to_region_probs(p);
    const RegionProbVolume rq = label_probs_to_region_probs(q);
    for (Region r : kAllRegions) {
      CHECK(rq.channel(r)[0] >= rp.channel(r)[0]);
    }
  }
}

TEST_CASE("voxel counts: |TC| = |ET| + |NCR|, |WT| = |TC| + |ED|") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LabelVolume v = oracles::random_labels({10, 10, 10}, seed, 2);
    std::int64_t n_ncr = 0, n_ed = 0;
    for (std::uint8_t code : v.voxels) {
      n_ncr += code == labels::kNcr;
      n_ed += code == labels::kEd;
    }
    const std::int64_t et = region_mask(v, Region::ET).count_true();
    const std::int64_t tc = region_mask(v, Region::TC).count_true();
    const std::int64_t wt = region_mask(v, Region::WT).count_true();
    CHECK(tc == et + n_ncr);
    CHECK(wt == tc + n_ed);
  }
}

TEST_CASE("geometry validation rejects bad dims, spacing and affine") {
  VolumeGeometry g = make_geometry({2, 2, 2});
  g.dims[1] = 0;
  CHECK_THROWS_AS(g.validate(), Error);
  g = make_geometry({2, 2, 2});
  g.spacing[0] = -1.0;
  CHECK_THROWS_AS(g.validate(), Error);
  g = make_geometry({2, 2, 2});
  g.affine[3][0] = 0.5;
  CHECK_THROWS_AS(g.validate(), Error);
}
