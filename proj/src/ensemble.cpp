#include "segkit/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "segkit/errors.hpp"
#include "segkit/regions.hpp"

namespace segkit {

EnsembleConfig EnsembleConfig::preset(std::string_view task) {
  EnsembleConfig cfg;
  if (task == "ped") {
    cfg.region_sources(Region::ET) = {{"nnunet-et-only", 1.0}, {"swin", 1.0}};
    cfg.region_sources(Region::TC) = {{"nnunet", 1.0}, {"swin", 1.0}};
    cfg.region_sources(Region::WT) = {{"nnunet", 1.0}, {"swin", 1.0}};
  } else if (task == "men") {
    for (Region r : kAllRegions) cfg.region_sources(r) = {{"nnunet", 1.0}, {"swin", 1.0}};
  } else if (task == "met") {
    for (Region r : kAllRegions) cfg.region_sources(r) = {{"nnunet", 1.0}};
  } else {
    throw Error::config("unknown ensemble preset '" + std::string(task) +
                        "' (expected ped, men or met)");
  }
  return cfg;
}

void EnsembleConfig::validate() const {
  if (expected_folds < 1) throw Error::config("ensemble: expected_folds must be >= 1");
  for (Region r : kAllRegions) {
    const auto& srcs = region_sources(r);
    if (srcs.empty())
      throw Error::config(std::string("ensemble: region ") + to_string(r) + " has no sources");
    for (const EnsembleSource& s : srcs) {
      if (s.model.empty()) throw Error::config("ensemble: empty model id");
      if (!(s.weight > 0.0)) throw Error::config("ensemble: weights must be positive");
    }
  }
}

RegionProbVolume ensemble_mean(std::span<const RegionProbVolume* const> members,
                               std::span<const double> weights) {
  if (members.empty()) throw Error::config("ensemble_mean: no members");
  if (weights.size() != members.size())
    throw Error::config("ensemble_mean: weights and members differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error::config("ensemble_mean: weights must be positive");
    total += w;
  }
  const VolumeGeometry& g = members.front()->geometry;
  for (const auto* m : members) require_same_grid(g, m->geometry, "ensemble_mean");

  RegionProbVolume out(g);
  const std::size_t n = static_cast<std::size_t>(g.voxel_count());
  std::vector<double> acc(n);
  for (int c = 0; c < 3; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto& src = members[m]->channels[c];
      const double w = weights[m];
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * static_cast<double>(src[i]);
    }
    auto& dst = out.channels[c];
    for (std::size_t i = 0; i < n; ++i)
      dst[i] = std::clamp(static_cast<float>(acc[i] / total), 0.0f, 1.0f);
  }
  return out;
}

RegionProbVolume fuse_case(const EnsembleConfig& config, std::span<const MemberOutput> members) {
  config.validate();
  if (members.empty()) throw Error::config("fuse_case: no members supplied");

  // Convert everything to region space once, keyed by model.
  std::map<std::string, std::vector<std::pair<int, RegionProbVolume>>> by_model;
  for (const MemberOutput& m : members) {
    RegionProbVolume region_probs =
        std::holds_alternative<RegionProbVolume>(m.payload)
            ? std::get<RegionProbVolume>(m.payload)
            : label_probs_to_region_probs(std::get<LabelProbVolume>(m.payload));
    by_model[m.model].emplace_back(m.fold, std::move(region_probs));
  }
  for (auto& [model, folds] : by_model) {
    std::sort(folds.begin(), folds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < folds.size(); ++i)
      if (folds[i].first == folds[i - 1].first)
        throw Error::config("fuse_case: duplicate fold " + std::to_string(folds[i].first) +
                            " for model '" + model + "'");
  }

  const VolumeGeometry& g = by_model.begin()->second.front().second.geometry;
  for (const auto& [model, folds] : by_model)
    for (const auto& [fold, vol] : folds) require_same_grid(g, vol.geometry, "fuse_case");

  RegionProbVolume out(g);
  const std::size_t n = static_cast<std::size_t>(g.voxel_count());
  std::vector<double> acc(n);
  std::set<std::string> fold_warned;
  for (Region r : kAllRegions) {
    const int c = static_cast<int>(r);
    std::fill(acc.begin(), acc.end(), 0.0);
    double total_weight = 0.0;
    for (const EnsembleSource& src : config.region_sources(r)) {
      const auto it = by_model.find(src.model);
      if (it == by_model.end())
        throw Error::config(std::string("fuse_case: region ") + to_string(r) +
                            " needs model '" + src.model + "' but no members were supplied");
      if (static_cast<int>(it->second.size()) != config.expected_folds &&
          fold_warned.insert(src.model).second)
        warn("fuse_case: model '" + src.model + "' has " + std::to_string(it->second.size()) +
             " folds, expected " + std::to_string(config.expected_folds) +
             "; averaging what is present");
      for (const auto& [fold, vol] : it->second) {
        const auto& chan = vol.channels[c];
        for (std::size_t i = 0; i < n; ++i) acc[i] += src.weight * static_cast<double>(chan[i]);
        total_weight += src.weight;
      }
    }
    auto& dst = out.channels[c];
    for (std::size_t i = 0; i < n; ++i)
      dst[i] = std::clamp(static_cast<float>(acc[i] / total_weight), 0.0f, 1.0f);
  }
  return out;
}

std::vector<ManifestEntry> read_member_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::io(path + ": cannot open manifest");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error::format(path + ": invalid JSON: " + e.what());
  }
  const nlohmann::json* list = &doc;
  if (doc.is_object() && doc.contains("members")) list = &doc["members"];
  if (!list->is_array()) throw Error::format(path + ": manifest must be a JSON array of members");
  std::vector<ManifestEntry> entries;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("model") || !item.contains("fold") ||
        !item.contains("path"))
      throw Error::format(path + ": each member needs model, fold and path");
    ManifestEntry e;
    e.model = item["model"].get<std::string>();
    e.fold = item["fold"].get<int>();
    e.path = item["path"].get<std::string>();
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error::format(path + ": manifest lists no members");
  return entries;
}

std::vector<MemberOutput> load_members(const std::vector<ManifestEntry>& entries) {
  std::vector<MemberOutput> members;
  members.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    MemberOutput m;
    m.model = e.model;
    m.fold = e.fold;
    m.payload = read_prob_volume(e.path);
    members.push_back(std::move(m));
  }
  return members;
}

}  // namespace segkit
