#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "segkit/ensemble.hpp"
#include "segkit/errors.hpp"
#include "segkit/regions.hpp"

using namespace segkit;

namespace {

RegionProbVolume random_region_probs(const VolumeGeometry& g, std::uint64_t seed,
                                     std::uint64_t stream) {
  RegionProbVolume v(g);
  CounterRng rng(seed, 9000 + stream);
  for (auto& channel : v.channels)
    for (float& p : channel) p = oracles::quantized_prob(rng);
  return v;
}

RegionProbVolume constant_probs(const VolumeGeometry& g, float et, float tc, float wt) {
  RegionProbVolume v(g);
  std::fill(v.channel(Region::ET).begin(), v.channel(Region::ET).end(), et);
  std::fill(v.channel(Region::TC).begin(), v.channel(Region::TC).end(), tc);
  std::fill(v.channel(Region::WT).begin(), v.channel(Region::WT).end(), wt);
  return v;
}

std::vector<std::string>& warn_log() {
  static std::vector<std::string> log;
  return log;
}
void capture_warn(const std::string& m) { warn_log().push_back(m); }

}  // namespace

TEST_CASE("ensemble_mean: single member with weight 1 is the identity") {
  const VolumeGeometry g = make_geometry({6, 6, 6});
  const RegionProbVolume m = random_region_probs(g, 1, 0);
  const RegionProbVolume* members[] = {&m};
  const double weights[] = {1.0};
  const RegionProbVolume out = ensemble_mean(members, weights);
  for (int c = 0; c < 3; ++c) CHECK(out.channels[c] == m.channels[c]);
}

TEST_CASE("ensemble_mean: equal-weight mean of 0.4 and 0.8 is 0.6") {
  const VolumeGeometry g = make_geometry({4, 4, 4});
  const RegionProbVolume a = constant_probs(g, 0.4f, 0.4f, 0.4f);
  const RegionProbVolume b = constant_probs(g, 0.8f, 0.8f, 0.8f);
  const RegionProbVolume* members[] = {&a, &b};
  const double weights[] = {1.0, 1.0};
  const RegionProbVolume out = ensemble_mean(members, weights);
  for (int c = 0; c < 3; ++c)
    for (float v : out.channels[c]) CHECK(v == doctest::Approx(0.6).epsilon(1e-7));
}

TEST_CASE("ensemble_mean agrees with an independent summation oracle") {
  const VolumeGeometry g = make_geometry({8, 7, 6});
  std::vector<RegionProbVolume> storage;
  std::vector<const RegionProbVolume*> members;
  std::vector<double> weights;
  CounterRng wrng(3, 1);
  for (int m = 0; m < 10; ++m) {
    storage.push_back(random_region_probs(g, 3, 10 + m));
    weights.push_back(wrng.next_in(0.25, 4.0));
  }
  for (const auto& s : storage) members.push_back(&s);
  const RegionProbVolume out = ensemble_mean(members, weights);
  double total = 0.0;
  for (double w : weights) total += w;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.channels[c].size(); ++i) {
      double acc = 0.0;
      for (int m = 0; m < 10; ++m) acc += weights[m] * storage[m].channels[c][i];
      CHECK(out.channels[c][i] == doctest::Approx(acc / total).epsilon(1e-6));
    }
}

TEST_CASE("ensemble_mean: input validation") {
  const VolumeGeometry g = make_geometry({4, 4, 4});
  const RegionProbVolume a = constant_probs(g, 0.5f, 0.5f, 0.5f);
  CHECK_THROWS_AS(ensemble_mean({}, {}), Error);
  const RegionProbVolume* members[] = {&a};
  const double negative[] = {-1.0};
  CHECK_THROWS_AS(ensemble_mean(members, negative), Error);
  RegionProbVolume other(make_geometry({4, 4, 5}));
  const RegionProbVolume* mismatched[] = {&a, &other};
  const double weights[] = {1.0, 1.0};
  CHECK_THROWS_AS(ensemble_mean(mismatched, weights), Error);
}

TEST_CASE("ensemble idempotence and convexity on random members") {
  const VolumeGeometry g = make_geometry({6, 6, 6});
  const RegionProbVolume a = random_region_probs(g, 8, 0);
  std::vector<const RegionProbVolume*> copies{&a, &a, &a, &a};
  const std::vector<double> w{1.0, 1.0, 1.0, 1.0};
  const RegionProbVolume same = ensemble_mean(copies, w);
  for (int c = 0; c < 3; ++c) CHECK(same.channels[c] == a.channels[c]);

  const RegionProbVolume b = random_region_probs(g, 8, 1);
  const RegionProbVolume c2 = random_region_probs(g, 8, 2);
  std::vector<const RegionProbVolume*> trio{&a, &b, &c2};
  const std::vector<double> w3{1.0, 2.0, 0.5};
  const RegionProbVolume out = ensemble_mean(trio, w3);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < out.channels[c].size(); ++i) {
      const float lo = std::min({a.channels[c][i], b.channels[c][i], c2.channels[c][i]});
      const float hi = std::max({a.channels[c][i], b.channels[c][i], c2.channels[c][i]});
      CHECK(out.channels[c][i] >= lo - 1e-7f);
      CHECK(out.channels[c][i] <= hi + 1e-7f);
    }
}

TEST_CASE("fuse_case is invariant under member order") {
  const VolumeGeometry g = make_geometry({6, 6, 6});
  std::vector<MemberOutput> members;
  for (int fold = 0; fold < 3; ++fold) {
    members.push_back({"nnunet", fold, random_region_probs(g, 11, 2 * fold)});
    members.push_back({"swin", fold, random_region_probs(g, 11, 2 * fold + 1)});
  }
  const EnsembleConfig cfg = [] {
    EnsembleConfig c = EnsembleConfig::preset("men");
    c.expected_folds = 3;
    return c;
  }();
  const RegionProbVolume forward = fuse_case(cfg, members);
  std::reverse(members.begin(), members.end());
  const RegionProbVolume reversed = fuse_case(cfg, members);
  for (int c = 0; c < 3; ++c) CHECK(forward.channels[c] == reversed.channels[c]);
}

TEST_CASE("met preset: swin members never influence the output") {
  const VolumeGeometry g = make_geometry({7, 6, 5});
  std::vector<MemberOutput> members;
  for (int fold = 0; fold < 5; ++fold) {
    members.push_back({"nnunet", fold, random_region_probs(g, 21, fold)});
    members.push_back({"swin", fold, random_region_probs(g, 21, 50 + fold)});
  }
  const EnsembleConfig cfg = EnsembleConfig::preset("met");
  const RegionProbVolume base = fuse_case(cfg, members);

  // perturb every swin payload
  for (MemberOutput& m : members)
    if (m.model == "swin")
      for (auto& channel : std::get<RegionProbVolume>(m.payload).channels)
        for (float& v : channel) v = 1.0f - v;
  const RegionProbVolume perturbed = fuse_case(cfg, members);
  for (int c = 0; c < 3; ++c) CHECK(base.channels[c] == perturbed.channels[c]);

  // and the output is exactly the nnunet fold mean
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < base.channels[c].size(); ++i) {
      double acc = 0.0;
      for (int fold = 0; fold < 5; ++fold)
        acc += random_region_probs(g, 21, fold).channels[c][i];
      CHECK(base.channels[c][i] == doctest::Approx(acc / 5.0).epsilon(1e-6));
    }
}

TEST_CASE("ped preset: ET-only model feeds ET, the others feed TC/WT") {
  const VolumeGeometry g = make_geometry({5, 5, 5});
  std::vector<MemberOutput> members;
  members.push_back({"nnunet-et-only", 0, constant_probs(g, 1.0f, 0.0f, 0.0f)});
  members.push_back({"swin", 0, constant_probs(g, 0.0f, 0.3f, 0.5f)});
  members.push_back({"nnunet", 0, constant_probs(g, 0.9f, 0.7f, 0.9f)});
  EnsembleConfig cfg = EnsembleConfig::preset("ped");
  cfg.expected_folds = 1;
  const RegionProbVolume out = fuse_case(cfg, members);
  // ET = mean(et-only 1.0, swin 0.0); the all-label nnunet does not contribute
  CHECK(out.channel(Region::ET)[0] == doctest::Approx(0.5).epsilon(1e-7));
  // TC/WT = mean(nnunet, swin); the ET-only member does not contribute
  CHECK(out.channel(Region::TC)[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(out.channel(Region::WT)[0] == doctest::Approx(0.7).epsilon(1e-7));

  // perturbing the ET-only member's TC/WT channels changes nothing
  std::get<RegionProbVolume>(members[0].payload).channel(Region::TC).assign(
      static_cast<std::size_t>(g.voxel_count()), 1.0f);
  std::get<RegionProbVolume>(members[0].payload).channel(Region::WT).assign(
      static_cast<std::size_t>(g.voxel_count()), 1.0f);
  const RegionProbVolume out2 = fuse_case(cfg, members);
  CHECK(out2.channel(Region::TC) == out.channel(Region::TC));
  CHECK(out2.channel(Region::WT) == out.channel(Region::WT));
}

TEST_CASE("fuse_case converts label-space members to region space") {
  const VolumeGeometry g = make_geometry({3, 3, 3});
  LabelProbVolume softmax(g);
  const std::size_t n = softmax.channels[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    softmax.channels[0][i] = 0.1f;
    softmax.channels[1][i] = 0.2f;
    softmax.channels[2][i] = 0.3f;
    softmax.channels[3][i] = 0.4f;
  }
  std::vector<MemberOutput> members;
  members.push_back({"nnunet", 0, softmax});
  EnsembleConfig cfg = EnsembleConfig::preset("met");
  cfg.expected_folds = 1;
  const RegionProbVolume out = fuse_case(cfg, members);
  CHECK(out.channel(Region::ET)[0] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(out.channel(Region::TC)[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(out.channel(Region::WT)[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("fuse_case: missing configured model errors, short fold count warns") {
  const VolumeGeometry g = make_geometry({4, 4, 4});
  const WarnSink prev = set_warn_sink(&capture_warn);
  std::vector<MemberOutput> members;
  members.push_back({"nnunet", 0, constant_probs(g, 0.5f, 0.5f, 0.5f)});
  const EnsembleConfig men = EnsembleConfig::preset("men");  // needs swin too
  CHECK_THROWS_AS(fuse_case(men, members), Error);

  warn_log().clear();
  const EnsembleConfig met = EnsembleConfig::preset("met");  // expects 5 folds, gets 1
  const RegionProbVolume out = fuse_case(met, members);
  set_warn_sink(prev);
  CHECK(out.channel(Region::ET)[0] == 0.5f);
  REQUIRE(warn_log().size() == 1);  // one warning per model, not per region
  CHECK(warn_log()[0].find("expected 5") != std::string::npos);
}

TEST_CASE("fuse_case: duplicate folds for one model are rejected") {
  const VolumeGeometry g = make_geometry({4, 4, 4});
  std::vector<MemberOutput> members;
  members.push_back({"nnunet", 2, constant_probs(g, 0.5f, 0.5f, 0.5f)});
  members.push_back({"nnunet", 2, constant_probs(g, 0.7f, 0.7f, 0.7f)});
  EnsembleConfig cfg = EnsembleConfig::preset("met");
  cfg.expected_folds = 2;
  CHECK_THROWS_AS(fuse_case(cfg, members), Error);
}

TEST_CASE("ensemble presets validate and unknown names are rejected") {
  for (const char* task : {"ped", "men", "met"}) EnsembleConfig::preset(task).validate();
  CHECK_THROWS_AS(EnsembleConfig::preset("glioma"), Error);
  EnsembleConfig cfg = EnsembleConfig::preset("met");
  cfg.region_sources(Region::ET).clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = EnsembleConfig::preset("met");
  cfg.region_sources(Region::WT)[0].weight = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
