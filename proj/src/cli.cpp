#include "segkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "segkit/ensemble.hpp"
#include "segkit/errors.hpp"
#include "segkit/metrics.hpp"
#include "segkit/nifti.hpp"
#include "segkit/parallel.hpp"
#include "segkit/phantom.hpp"
#include "segkit/postprocess.hpp"
#include "segkit/regions.hpp"
#include "segkit/report.hpp"
#include "segkit/sweep.hpp"

namespace segkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::io(path + ": cannot open");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error::format(path + ": invalid JSON: " + e.what());
  }
  return doc;
}

std::string case_stem(const fs::path& file) {
  std::string name = file.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::size_t len = std::string(ext).size();
    if (name.size() > len && name.compare(name.size() - len, len, ext) == 0) {
      name.resize(name.size() - len);
      break;
    }
  }
  for (const char* tag : {"_gt", "-gt", "_pred", "-pred", "_seg", "-seg", "_label", "-label"}) {
    const std::size_t len = std::string(tag).size();
    if (name.size() > len && name.compare(name.size() - len, len, tag) == 0) {
      name.resize(name.size() - len);
      break;
    }
  }
  return name;
}

bool is_nifti(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 4 && (name.ends_with(".nii") || name.ends_with(".nii.gz"));
}

std::vector<fs::path> list_nifti(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error::io(dir + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_nifti(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

struct CasePair {
  std::string id;
  std::string pred;
  std::string gt;
};

std::vector<CasePair> pair_by_stem(const std::string& pred_dir, const std::string& gt_dir) {
  std::map<std::string, std::string> preds;
  for (const fs::path& p : list_nifti(pred_dir)) {
    const std::string id = case_stem(p);
    if (!preds.emplace(id, p.string()).second)
      throw Error::io(pred_dir + ": duplicate prediction for case '" + id + "'");
  }
  std::vector<CasePair> pairs;
  for (const fs::path& g : list_nifti(gt_dir)) {
    const std::string id = case_stem(g);
    const auto it = preds.find(id);
    if (it == preds.end())
      throw Error::io("no prediction found for case '" + id + "' in " + pred_dir);
    pairs.push_back({id, it->second, g.string()});
    preds.erase(it);
  }
  for (const auto& [id, path] : preds)
    warn("prediction '" + path + "' has no ground-truth counterpart; ignored");
  if (pairs.empty()) throw Error::io(gt_dir + ": no ground-truth volumes found");
  return pairs;
}

std::vector<CasePair> pairs_from_manifest(const std::string& path) {
  const json doc = load_json(path);
  if (!doc.is_array()) throw Error::format(path + ": pairs manifest must be a JSON array");
  std::vector<CasePair> pairs;
  for (const auto& item : doc) {
    if (!item.contains("case") || !item.contains("pred") || !item.contains("gt"))
      throw Error::format(path + ": each pair needs case, pred and gt");
    pairs.push_back({item["case"].get<std::string>(), item["pred"].get<std::string>(),
                     item["gt"].get<std::string>()});
  }
  if (pairs.empty()) throw Error::format(path + ": pairs manifest is empty");
  std::sort(pairs.begin(), pairs.end(), [](const CasePair& a, const CasePair& b) {
    return a.id < b.id;
  });
  return pairs;
}

Region region_from_json(const json& j) { return region_from_string(j.get<std::string>()); }

RatioRule ratio_rule_from_json(const json& j) {
  RatioRule rule;
  if (j.contains("numerator")) rule.numerator = selector_from_string(j["numerator"].get<std::string>());
  if (j.contains("denominator")) rule.denominator = region_from_json(j["denominator"]);
  if (j.contains("threshold")) rule.threshold = j["threshold"].get<double>();
  if (j.contains("source")) rule.source_label = static_cast<std::uint8_t>(j["source"].get<int>());
  if (j.contains("target")) rule.target_label = static_cast<std::uint8_t>(j["target"].get<int>());
  rule.validate();
  return rule;
}

json ratio_rule_to_json(const RatioRule& rule) {
  json j;
  j["numerator"] = rule.numerator.name();
  j["denominator"] = to_string(rule.denominator);
  j["threshold"] = rule.threshold;
  j["source"] = static_cast<int>(rule.source_label);
  j["target"] = static_cast<int>(rule.target_label);
  return j;
}

// Shared postprocess options: preset < JSON rules file < flags.
struct PostprocessArgs {
  std::string preset;
  std::string rules_path;
  std::int64_t min_size = -1;  // -1 = not set
  double et_wt = -1.0;
  double ed_wt = -1.0;
  int connectivity = 0;
  std::string scope;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Task preset: ped, men or met")
        ->check(CLI::IsMember({"ped", "men", "met"}));
    cmd->add_option("--rules", rules_path, "Full postprocess config as JSON");
    cmd->add_option("--min-size", min_size, "Minimum connected-component size (voxels)");
    cmd->add_option("--et-wt", et_wt, "ET/WT ratio threshold (ET below it becomes NCR)");
    cmd->add_option("--ed-wt", ed_wt, "ED/WT ratio threshold (ED below it becomes NCR)");
    cmd->add_option("--connectivity", connectivity, "Component connectivity: 6, 18 or 26")
        ->check(CLI::IsMember({0, 6, 18, 26}));
    cmd->add_option("--scope", scope, "Size-filter scope: combined or per-label")
        ->check(CLI::IsMember({"", "combined", "per-label"}));
  }

  PostprocessConfig resolve() const {
    PostprocessConfig cfg;
    if (!preset.empty()) cfg = PostprocessConfig::preset(preset);
    if (!rules_path.empty()) {
      const json doc = load_json(rules_path);
      cfg = PostprocessConfig{};
      if (doc.contains("min_component_size"))
        cfg.min_component_size = doc["min_component_size"].get<std::int64_t>();
      if (doc.contains("connectivity"))
        cfg.connectivity = connectivity_from_int(doc["connectivity"].get<int>());
      if (doc.contains("scope"))
        cfg.scope = doc["scope"].get<std::string>() == "per-label"
                        ? ComponentFilterScope::per_label
                        : ComponentFilterScope::combined_foreground;
      if (doc.contains("rules"))
        for (const auto& r : doc["rules"]) cfg.rules.push_back(ratio_rule_from_json(r));
    }
    if (min_size >= 0) cfg.min_component_size = min_size;
    if (et_wt >= 0.0) set_ratio(cfg, MaskSelector::of_region(Region::ET), labels::kEt, et_wt);
    if (ed_wt >= 0.0) set_ratio(cfg, MaskSelector::of_label(labels::kEd), labels::kEd, ed_wt);
    if (connectivity != 0) cfg.connectivity = connectivity_from_int(connectivity);
    if (scope == "per-label") cfg.scope = ComponentFilterScope::per_label;
    if (scope == "combined") cfg.scope = ComponentFilterScope::combined_foreground;
    cfg.validate();
    return cfg;
  }

  static void set_ratio(PostprocessConfig& cfg, MaskSelector numerator, std::uint8_t source,
                        double threshold) {
    for (RatioRule& r : cfg.rules) {
      if (r.source_label == source) {
        r.threshold = threshold;
        return;
      }
    }
    cfg.rules.push_back({numerator, Region::WT, threshold, source, labels::kNcr});
  }

  json resolved_json() const {
    const PostprocessConfig cfg = resolve();
    json j;
    j["min_component_size"] = cfg.min_component_size;
    j["connectivity"] = static_cast<int>(cfg.connectivity);
    j["scope"] = cfg.scope == ComponentFilterScope::per_label ? "per-label" : "combined";
    j["rules"] = json::array();
    for (const RatioRule& r : cfg.rules) j["rules"].push_back(ratio_rule_to_json(r));
    return j;
  }
};

struct MetricsArgs {
  int dilation_radius = 3;
  std::int64_t min_lesion_size = 0;
  double fp_dice = 0.0;
  double fp_hd95 = 374.0;
  int connectivity = 26;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--dilation-radius", dilation_radius,
                    "Dilation radius for lesion merging/matching");
    cmd->add_option("--min-lesion-size", min_lesion_size,
                    "Ground-truth lesions below this size are not scored");
    cmd->add_option("--fp-dice", fp_dice, "Dice charged to unmatched predictions");
    cmd->add_option("--fp-hd95", fp_hd95, "HD95 (mm) charged to unmatched entries");
    cmd->add_option("--metrics-connectivity", connectivity, "Lesion connectivity: 6, 18 or 26")
        ->check(CLI::IsMember({6, 18, 26}));
  }

  LesionwiseParams resolve() const {
    LesionwiseParams p;
    p.match_dilation_radius = dilation_radius;
    p.min_gt_lesion_size = min_lesion_size;
    p.fp_dice = fp_dice;
    p.fp_hd95_mm = fp_hd95;
    p.connectivity = connectivity_from_int(connectivity);
    p.validate();
    return p;
  }

  json resolved_json() const {
    json j;
    j["match_dilation_radius"] = dilation_radius;
    j["min_gt_lesion_size"] = min_lesion_size;
    j["fp_dice"] = fp_dice;
    j["fp_hd95_mm"] = fp_hd95;
    j["connectivity"] = connectivity;
    return j;
  }
};

LabelSchema schema_from_name(const std::string& name) {
  if (name == "default" || name.empty()) return LabelSchema{};
  if (name == "brats-legacy") return LabelSchema::brats_legacy();
  throw Error::config("unknown label schema '" + name + "' (expected default or brats-legacy)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error::io(dir + ": cannot create directory: " + ec.message());
}

void print_dry_run(const json& resolved) { std::cout << resolved.dump(2) << "\n"; }

// ---- subcommand payloads --------------------------------------------------

struct EnsembleCmd {
  std::string manifest;
  std::string preset;
  std::string sources_path;
  std::string out_dir;
  std::string case_id = "case";
  int folds = 5;
  bool write_probs = false;
  double t_wt = 0.5, t_tc = 0.5, t_et = 0.5;
  bool dry_run = false;

  EnsembleConfig resolve_config() const {
    EnsembleConfig cfg;
    if (!preset.empty())
      cfg = EnsembleConfig::preset(preset);
    else if (sources_path.empty())
      throw Error::config("ensemble: provide --preset or --sources");
    if (!sources_path.empty()) {
      const json doc = load_json(sources_path);
      cfg = EnsembleConfig{};
      if (doc.contains("k")) cfg.expected_folds = doc["k"].get<int>();
      if (!doc.contains("regions")) throw Error::format(sources_path + ": missing 'regions'");
      for (Region r : kAllRegions) {
        const std::string key = to_string(r);
        if (!doc["regions"].contains(key))
          throw Error::format(sources_path + ": missing region '" + key + "'");
        for (const auto& s : doc["regions"][key]) {
          EnsembleSource src;
          src.model = s["model"].get<std::string>();
          if (s.contains("weight")) src.weight = s["weight"].get<double>();
          cfg.region_sources(r).push_back(std::move(src));
        }
      }
    }
    cfg.expected_folds = folds;
    cfg.validate();
    return cfg;
  }

  json resolved_json() const {
    const EnsembleConfig cfg = resolve_config();
    json j;
    j["command"] = "ensemble";
    j["manifest"] = manifest;
    j["out"] = out_dir;
    j["case_id"] = case_id;
    j["expected_folds"] = cfg.expected_folds;
    j["decode_thresholds"] = {t_wt, t_tc, t_et};
    j["write_probs"] = write_probs;
    for (Region r : kAllRegions) {
      json srcs = json::array();
      for (const auto& s : cfg.region_sources(r))
        srcs.push_back({{"model", s.model}, {"weight", s.weight}});
      j["regions"][to_string(r)] = std::move(srcs);
    }
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    const EnsembleConfig cfg = resolve_config();
    const auto entries = read_member_manifest(manifest);
    const auto members = load_members(entries);
    const RegionProbVolume fused = fuse_case(cfg, members);
    ensure_dir(out_dir);
    if (write_probs)
      write_prob_volume(fused, (fs::path(out_dir) / (case_id + "_probs.nii.gz")).string());
    const LabelVolume decoded = decode_labels(fused, t_wt, t_tc, t_et);
    write_label_volume(decoded, (fs::path(out_dir) / (case_id + ".nii.gz")).string());
    return 0;
  }
};

struct PostprocessCmd {
  std::string input;
  std::string input_dir;
  std::string output;
  std::string out_dir;
  std::string schema = "default";
  PostprocessArgs args;
  bool dry_run = false;

  json resolved_json() const {
    json j = args.resolved_json();
    j["command"] = "postprocess";
    if (!input.empty()) j["in"] = input;
    if (!input_dir.empty()) j["in_dir"] = input_dir;
    if (!output.empty()) j["out"] = output;
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    j["schema"] = schema;
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    const PostprocessConfig cfg = args.resolve();
    const LabelSchema sch = schema_from_name(schema);
    if (!input.empty()) {
      if (output.empty()) throw Error::usage("postprocess: --out is required with --in");
      const LabelVolume cleaned = postprocess(read_label_volume(input, sch), cfg);
      if (const fs::path parent = fs::path(output).parent_path(); !parent.empty())
        ensure_dir(parent.string());
      write_label_volume(cleaned, output);
      return 0;
    }
    if (input_dir.empty()) throw Error::usage("postprocess: provide --in or --in-dir");
    if (out_dir.empty()) throw Error::usage("postprocess: --out-dir is required with --in-dir");
    ensure_dir(out_dir);
    for (const fs::path& file : list_nifti(input_dir)) {
      const LabelVolume cleaned = postprocess(read_label_volume(file.string(), sch), cfg);
      write_label_volume(cleaned, (fs::path(out_dir) / file.filename()).string());
    }
    return 0;
  }
};

struct EvaluateCmd {
  std::string pred_dir;
  std::string gt_dir;
  std::string pairs_path;
  std::string out_dir;
  std::string schema = "default";
  int jobs = default_jobs();
  MetricsArgs metrics;
  bool dry_run = false;

  json resolved_json() const {
    json j;
    j["command"] = "evaluate";
    j["pred"] = pred_dir;
    j["gt"] = gt_dir;
    if (!pairs_path.empty()) j["pairs"] = pairs_path;
    j["out"] = out_dir;
    j["jobs"] = jobs;
    j["schema"] = schema;
    j["metrics"] = metrics.resolved_json();
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    const LesionwiseParams params = metrics.resolve();
    const LabelSchema sch = schema_from_name(schema);
    const std::vector<CasePair> pairs =
        pairs_path.empty() ? pair_by_stem(pred_dir, gt_dir) : pairs_from_manifest(pairs_path);

    ensure_dir(out_dir);
    ensure_dir((fs::path(out_dir) / "cases").string());
    std::vector<CaseReport> reports(pairs.size());
    parallel_for(static_cast<std::int64_t>(pairs.size()), jobs, [&](std::int64_t i) {
      const CasePair& pair = pairs[static_cast<std::size_t>(i)];
      const LabelVolume pred = read_label_volume(pair.pred, sch);
      const LabelVolume gt = read_label_volume(pair.gt, sch);
      reports[static_cast<std::size_t>(i)] = evaluate_case(pred, gt, params, pair.id);
      write_case_report(reports[static_cast<std::size_t>(i)],
                        (fs::path(out_dir) / "cases" / (pair.id + ".json")).string());
    });
    write_cohort_csv(reports, (fs::path(out_dir) / "cohort.csv").string());
    return 0;
  }
};

struct SweepCmd {
  std::string spec_path;
  std::string out_dir;
  int jobs = default_jobs();
  bool dry_run = false;

  struct Loaded {
    SweepSpec spec;
    std::vector<CasePair> case_paths;
    std::array<double, 3> decode_thresholds{0.5, 0.5, 0.5};
  };

  Loaded load_spec() const {
    const json doc = load_json(spec_path);
    Loaded loaded;
    SweepSpec& spec = loaded.spec;

    if (!doc.contains("parameter")) throw Error::format(spec_path + ": missing 'parameter'");
    const json& param = doc["parameter"];
    if (param.is_string() && param.get<std::string>() == "min_component_size") {
      spec.parameter.kind = SweepParameter::Kind::min_component_size;
    } else if (param.is_object() && param.contains("ratio")) {
      spec.parameter.kind = SweepParameter::Kind::ratio;
      spec.parameter.rule = ratio_rule_from_json(param["ratio"]);
    } else {
      throw Error::format(spec_path +
                          ": parameter must be \"min_component_size\" or {\"ratio\": {...}}");
    }

    if (doc.contains("grid")) {
      const json& grid = doc["grid"];
      if (grid.is_array()) {
        for (const auto& v : grid) spec.grid.push_back(v.get<double>());
      } else if (grid.is_object()) {
        const double start = grid.at("start").get<double>();
        const double stop = grid.at("stop").get<double>();
        const double step = grid.at("step").get<double>();
        if (!(step > 0.0)) throw Error::config(spec_path + ": grid step must be positive");
        for (double v = start; v <= stop + 1e-12; v += step) spec.grid.push_back(v);
      } else {
        throw Error::format(spec_path + ": grid must be an array or {start,stop,step}");
      }
    } else if (spec.parameter.kind == SweepParameter::Kind::min_component_size) {
      for (int v = 0; v <= 300; v += 5) spec.grid.push_back(v);
    } else {
      for (int v = 0; v <= 100; ++v) spec.grid.push_back(v / 100.0);
    }

    if (doc.contains("objective_regions")) {
      spec.objective_regions.clear();
      for (const auto& r : doc["objective_regions"])
        spec.objective_regions.push_back(region_from_json(r));
    }
    if (doc.contains("connectivity"))
      spec.connectivity = connectivity_from_int(doc["connectivity"].get<int>());
    if (doc.contains("baseline_min_size"))
      spec.baseline_min_size = doc["baseline_min_size"].get<std::int64_t>();
    if (doc.contains("metrics")) {
      const json& m = doc["metrics"];
      if (m.contains("match_dilation_radius"))
        spec.metrics.match_dilation_radius = m["match_dilation_radius"].get<int>();
      if (m.contains("min_gt_lesion_size"))
        spec.metrics.min_gt_lesion_size = m["min_gt_lesion_size"].get<std::int64_t>();
      if (m.contains("fp_dice")) spec.metrics.fp_dice = m["fp_dice"].get<double>();
      if (m.contains("fp_hd95_mm")) spec.metrics.fp_hd95_mm = m["fp_hd95_mm"].get<double>();
      if (m.contains("connectivity"))
        spec.metrics.connectivity = connectivity_from_int(m["connectivity"].get<int>());
    }
    if (doc.contains("decode_thresholds")) {
      const auto& t = doc["decode_thresholds"];
      if (!t.is_array() || t.size() != 3)
        throw Error::format(spec_path + ": decode_thresholds must be [wt, tc, et]");
      loaded.decode_thresholds = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
    }

    if (!doc.contains("cases")) throw Error::format(spec_path + ": missing 'cases'");
    for (const auto& c : doc["cases"]) {
      if (!c.contains("id") || !c.contains("pred") || !c.contains("gt"))
        throw Error::format(spec_path + ": each case needs id, pred and gt");
      loaded.case_paths.push_back({c["id"].get<std::string>(), c["pred"].get<std::string>(),
                                   c["gt"].get<std::string>()});
    }
    std::sort(loaded.case_paths.begin(), loaded.case_paths.end(),
              [](const CasePair& a, const CasePair& b) { return a.id < b.id; });
    spec.validate();
    return loaded;
  }

  json resolved_json() const {
    const Loaded loaded = load_spec();
    json j;
    j["command"] = "sweep";
    j["spec"] = spec_path;
    j["out"] = out_dir;
    j["jobs"] = jobs;
    j["parameter"] = loaded.spec.parameter.kind == SweepParameter::Kind::min_component_size
                         ? json("min_component_size")
                         : json{{"ratio", ratio_rule_to_json(loaded.spec.parameter.rule)}};
    j["grid_size"] = loaded.spec.grid.size();
    j["grid_first"] = loaded.spec.grid.front();
    j["grid_last"] = loaded.spec.grid.back();
    json regions = json::array();
    for (Region r : loaded.spec.objective_regions) regions.push_back(to_string(r));
    j["objective_regions"] = std::move(regions);
    j["baseline_min_size"] = loaded.spec.baseline_min_size;
    j["n_cases"] = loaded.case_paths.size();
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    const Loaded loaded = load_spec();
    std::vector<SweepCase> cases(loaded.case_paths.size());
    parallel_for(static_cast<std::int64_t>(cases.size()), jobs, [&](std::int64_t i) {
      const CasePair& pair = loaded.case_paths[static_cast<std::size_t>(i)];
      SweepCase& sc = cases[static_cast<std::size_t>(i)];
      sc.case_id = pair.id;
      try {
        const NiftiHeaderSummary header = read_nifti_header(pair.pred);
        if (header.channels == 1) {
          sc.pred = read_label_volume(pair.pred);
        } else {
          const ProbVolume probs = read_prob_volume(pair.pred);
          const RegionProbVolume region_probs =
              std::holds_alternative<RegionProbVolume>(probs)
                  ? std::get<RegionProbVolume>(probs)
                  : label_probs_to_region_probs(std::get<LabelProbVolume>(probs));
          sc.pred = decode_labels(region_probs, loaded.decode_thresholds[0],
                                  loaded.decode_thresholds[1], loaded.decode_thresholds[2]);
        }
        sc.gt = read_label_volume(pair.gt);
      } catch (const Error& e) {
        throw Error(e.category(), "case '" + pair.id + "': " + e.what());
      }
    });

    const SweepCurve curve = sweep(loaded.spec, cases, jobs);
    ensure_dir(out_dir);
    emit_curve(curve, (fs::path(out_dir) / "curve.csv").string());
    return 0;
  }
};

struct PhantomCmd {
  std::string config_path;
  std::string out_dir;
  int count = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool write_probs = true;
  bool dry_run = false;

  PhantomSpec resolve_spec() const {
    PhantomSpec spec;
    if (!config_path.empty()) {
      const json doc = load_json(config_path);
      auto read_i64_triplet = [&](const char* key, std::array<std::int64_t, 3>& dst) {
        if (doc.contains(key)) {
          const auto& a = doc[key];
          dst = {a.at(0).get<std::int64_t>(), a.at(1).get<std::int64_t>(),
                 a.at(2).get<std::int64_t>()};
        }
      };
      read_i64_triplet("dims", spec.dims);
      if (doc.contains("spacing")) {
        const auto& a = doc["spacing"];
        spec.spacing = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
      }
      auto read_range = [&](const char* key, std::array<double, 2>& dst) {
        if (doc.contains(key)) dst = {doc[key].at(0).get<double>(), doc[key].at(1).get<double>()};
      };
      if (doc.contains("n_lesions")) spec.n_lesions = doc["n_lesions"].get<int>();
      read_range("wt_radius_range", spec.wt_radius_range);
      read_range("tc_radius_range", spec.tc_radius_range);
      read_range("et_radius_range", spec.et_radius_range);
      if (doc.contains("n_spurious")) spec.n_spurious = doc["n_spurious"].get<int>();
      if (doc.contains("spurious_size_range"))
        spec.spurious_size_range = {doc["spurious_size_range"].at(0).get<std::int64_t>(),
                                    doc["spurious_size_range"].at(1).get<std::int64_t>()};
      if (doc.contains("spurious_label"))
        spec.spurious_label = static_cast<std::uint8_t>(doc["spurious_label"].get<int>());
      if (doc.contains("prob_blur_radius"))
        spec.prob_blur_radius = doc["prob_blur_radius"].get<int>();
      if (doc.contains("label_noise_rate"))
        spec.label_noise_rate = doc["label_noise_rate"].get<double>();
      if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
    }
    if (seed_given) spec.seed = seed;
    spec.validate();
    return spec;
  }

  json resolved_json() const {
    const PhantomSpec spec = resolve_spec();
    json j;
    j["command"] = "phantom";
    j["out"] = out_dir;
    j["count"] = count;
    j["dims"] = spec.dims;
    j["spacing"] = spec.spacing;
    j["n_lesions"] = spec.n_lesions;
    j["wt_radius_range"] = spec.wt_radius_range;
    j["tc_radius_range"] = spec.tc_radius_range;
    j["et_radius_range"] = spec.et_radius_range;
    j["n_spurious"] = spec.n_spurious;
    j["spurious_size_range"] = spec.spurious_size_range;
    j["spurious_label"] = static_cast<int>(spec.spurious_label);
    j["prob_blur_radius"] = spec.prob_blur_radius;
    j["label_noise_rate"] = spec.label_noise_rate;
    j["seed"] = spec.seed;
    j["write_probs"] = write_probs;
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    if (count < 1) throw Error::config("phantom: --count must be >= 1");
    PhantomSpec spec = resolve_spec();
    ensure_dir((fs::path(out_dir) / "gt").string());
    ensure_dir((fs::path(out_dir) / "pred").string());
    ensure_dir((fs::path(out_dir) / "manifests").string());
    if (write_probs) ensure_dir((fs::path(out_dir) / "probs").string());
    for (int i = 0; i < count; ++i) {
      PhantomSpec case_spec = spec;
      case_spec.seed = spec.seed + static_cast<std::uint64_t>(i);
      const PhantomOutput out = generate_phantom(case_spec);
      char name[32];
      std::snprintf(name, sizeof(name), "case%03d", i);
      write_label_volume(out.gt, (fs::path(out_dir) / "gt" / (std::string(name) + ".nii.gz")).string());
      write_label_volume(out.pred,
                         (fs::path(out_dir) / "pred" / (std::string(name) + ".nii.gz")).string());
      if (write_probs)
        write_prob_volume(out.probs,
                          (fs::path(out_dir) / "probs" / (std::string(name) + ".nii.gz")).string());
      write_text_file((fs::path(out_dir) / "manifests" / (std::string(name) + ".json")).string(),
                      phantom_manifest_json(case_spec, out));
    }
    return 0;
  }
};

struct PipelineCmd {
  std::string cases_path;
  std::string out_dir;
  int jobs = default_jobs();
  int folds = 5;
  PostprocessArgs post_args;  // its --preset drives the ensemble stage too
  MetricsArgs metrics;
  double t_wt = 0.5, t_tc = 0.5, t_et = 0.5;
  bool dry_run = false;

  json resolved_json() const {
    json j;
    j["command"] = "pipeline";
    j["cases"] = cases_path;
    j["out"] = out_dir;
    j["jobs"] = jobs;
    j["preset"] = post_args.preset;
    j["expected_folds"] = folds;
    j["decode_thresholds"] = {t_wt, t_tc, t_et};
    j["postprocess"] = post_args.resolved_json();
    j["metrics"] = metrics.resolved_json();
    return j;
  }

  int run() const {
    if (dry_run) {
      print_dry_run(resolved_json());
      return 0;
    }
    if (post_args.preset.empty()) throw Error::usage("pipeline: --preset is required");
    EnsembleConfig ens_cfg = EnsembleConfig::preset(post_args.preset);
    ens_cfg.expected_folds = folds;
    const PostprocessConfig post_cfg = post_args.resolve();
    const LesionwiseParams params = metrics.resolve();

    const json doc = load_json(cases_path);
    if (!doc.is_array()) throw Error::format(cases_path + ": cases file must be a JSON array");
    struct PipelineCase {
      std::string id;
      std::vector<ManifestEntry> members;
      std::string gt;
    };
    std::vector<PipelineCase> pipeline_cases;
    for (const auto& c : doc) {
      if (!c.contains("case") || !c.contains("members") || !c.contains("gt"))
        throw Error::format(cases_path + ": each case needs case, members and gt");
      PipelineCase pc;
      pc.id = c["case"].get<std::string>();
      pc.gt = c["gt"].get<std::string>();
      for (const auto& m : c["members"]) {
        if (!m.contains("model") || !m.contains("fold") || !m.contains("path"))
          throw Error::format(cases_path + ": each member needs model, fold and path");
        pc.members.push_back({m["model"].get<std::string>(), m["fold"].get<int>(),
                              m["path"].get<std::string>()});
      }
      pipeline_cases.push_back(std::move(pc));
    }
    if (pipeline_cases.empty()) throw Error::format(cases_path + ": no cases listed");
    std::sort(pipeline_cases.begin(), pipeline_cases.end(),
              [](const PipelineCase& a, const PipelineCase& b) { return a.id < b.id; });

    ensure_dir((fs::path(out_dir) / "ensemble").string());
    ensure_dir((fs::path(out_dir) / "postprocess").string());
    ensure_dir((fs::path(out_dir) / "reports" / "cases").string());

    std::vector<CaseReport> reports(pipeline_cases.size());
    parallel_for(static_cast<std::int64_t>(pipeline_cases.size()), jobs, [&](std::int64_t i) {
      const PipelineCase& pc = pipeline_cases[static_cast<std::size_t>(i)];
      const auto members = load_members(pc.members);
      const RegionProbVolume fused = fuse_case(ens_cfg, members);
      const LabelVolume decoded = decode_labels(fused, t_wt, t_tc, t_et);
      write_label_volume(decoded,
                         (fs::path(out_dir) / "ensemble" / (pc.id + ".nii.gz")).string());
      const LabelVolume cleaned = postprocess(decoded, post_cfg);
      write_label_volume(cleaned,
                         (fs::path(out_dir) / "postprocess" / (pc.id + ".nii.gz")).string());
      const LabelVolume gt = read_label_volume(pc.gt);
      reports[static_cast<std::size_t>(i)] = evaluate_case(cleaned, gt, params, pc.id);
      write_case_report(reports[static_cast<std::size_t>(i)],
                        (fs::path(out_dir) / "reports" / "cases" / (pc.id + ".json")).string());
    });
    write_cohort_csv(reports, (fs::path(out_dir) / "reports" / "cohort.csv").string());
    return 0;
  }
};

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"segkit: region-wise ensembling, post-processing and lesion-wise "
               "evaluation for volumetric tumor segmentations"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read default flag values from a TOML file");

  int rc = 0;

  EnsembleCmd ensemble_cmd;
  PostprocessCmd post_cmd;
  EvaluateCmd eval_cmd;
  SweepCmd sweep_cmd;
  PhantomCmd phantom_cmd;
  PipelineCmd pipeline_cmd;

  {
    CLI::App* cmd = app.add_subcommand("ensemble", "Fuse per-fold model outputs for one case");
    cmd->add_option("--manifest", ensemble_cmd.manifest,
                    "JSON array of {model, fold, path} members")
        ->required();
    cmd->add_option("--preset", ensemble_cmd.preset, "Task preset: ped, men or met")
        ->check(CLI::IsMember({"ped", "men", "met"}));
    cmd->add_option("--sources", ensemble_cmd.sources_path, "Per-region source table (JSON)");
    cmd->add_option("--out", ensemble_cmd.out_dir, "Output directory")
        ->envname("SEGKIT_OUT")
        ->required();
    cmd->add_option("--case-id", ensemble_cmd.case_id, "Case id used in output filenames");
    cmd->add_option("--k", ensemble_cmd.folds, "Expected folds per model");
    cmd->add_flag("--write-probs", ensemble_cmd.write_probs, "Also write the fused probabilities");
    cmd->add_option("--t-wt", ensemble_cmd.t_wt, "WT decode threshold");
    cmd->add_option("--t-tc", ensemble_cmd.t_tc, "TC decode threshold");
    cmd->add_option("--t-et", ensemble_cmd.t_et, "ET decode threshold");
    cmd->add_flag("--dry-run", ensemble_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = ensemble_cmd.run(); });
  }
  {
    CLI::App* cmd = app.add_subcommand("postprocess", "Clean a segmentation: size filter + ratio rules");
    cmd->add_option("--in", post_cmd.input, "Input label volume (.nii/.nii.gz)");
    cmd->add_option("--in-dir", post_cmd.input_dir, "Directory of label volumes");
    cmd->add_option("--out", post_cmd.output, "Output path")->envname("SEGKIT_OUT");
    cmd->add_option("--out-dir", post_cmd.out_dir, "Output directory for --in-dir");
    cmd->add_option("--schema", post_cmd.schema, "Label schema: default or brats-legacy");
    post_cmd.args.add_flags(cmd);
    cmd->add_flag("--dry-run", post_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = post_cmd.run(); });
  }
  {
    CLI::App* cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
    cmd->add_option("--pred", eval_cmd.pred_dir, "Directory of predicted label volumes");
    cmd->add_option("--gt", eval_cmd.gt_dir, "Directory of ground-truth label volumes");
    cmd->add_option("--pairs", eval_cmd.pairs_path,
                    "Explicit JSON pairing [{case, pred, gt}] (overrides stem matching)");
    cmd->add_option("--out", eval_cmd.out_dir, "Output directory")
        ->envname("SEGKIT_OUT")
        ->required();
    cmd->add_option("--jobs", eval_cmd.jobs, "Worker threads");
    cmd->add_option("--schema", eval_cmd.schema, "Label schema: default or brats-legacy");
    eval_cmd.metrics.add_flags(cmd);
    cmd->add_flag("--dry-run", eval_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = eval_cmd.run(); });
  }
  {
    CLI::App* cmd = app.add_subcommand("sweep", "Grid-search a post-processing threshold");
    cmd->add_option("--spec", sweep_cmd.spec_path, "Sweep spec (JSON)")->required();
    cmd->add_option("--out", sweep_cmd.out_dir, "Output directory")
        ->envname("SEGKIT_OUT")
        ->required();
    cmd->add_option("--jobs", sweep_cmd.jobs, "Worker threads");
    cmd->add_flag("--dry-run", sweep_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = sweep_cmd.run(); });
  }
  {
    CLI::App* cmd = app.add_subcommand("phantom", "Generate synthetic labeled volumes");
    cmd->add_option("--spec", phantom_cmd.config_path, "Phantom spec (JSON)");
    cmd->add_option("--out", phantom_cmd.out_dir, "Output directory")
        ->envname("SEGKIT_OUT")
        ->required();
    cmd->add_option("--count", phantom_cmd.count, "Number of cases (seeds seed..seed+count-1)");
    cmd->add_option("--seed", phantom_cmd.seed, "Base seed (overrides the spec)")
        ->each([&](const std::string&) { phantom_cmd.seed_given = true; });
    cmd->add_flag("!--no-probs", phantom_cmd.write_probs, "Skip probability volumes");
    cmd->add_flag("--dry-run", phantom_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = phantom_cmd.run(); });
  }
  {
    CLI::App* cmd = app.add_subcommand("pipeline", "ensemble -> postprocess -> evaluate");
    cmd->add_option("--cases", pipeline_cmd.cases_path,
                    "JSON array of {case, members, gt} entries")
        ->required();
    cmd->add_option("--out", pipeline_cmd.out_dir, "Output directory")
        ->envname("SEGKIT_OUT")
        ->required();
    cmd->add_option("--jobs", pipeline_cmd.jobs, "Worker threads");
    cmd->add_option("--k", pipeline_cmd.folds, "Expected folds per model");
    cmd->add_option("--t-wt", pipeline_cmd.t_wt, "WT decode threshold");
    cmd->add_option("--t-tc", pipeline_cmd.t_tc, "TC decode threshold");
    cmd->add_option("--t-et", pipeline_cmd.t_et, "ET decode threshold");
    pipeline_cmd.post_args.add_flags(cmd);
    pipeline_cmd.metrics.add_flags(cmd);
    cmd->add_flag("--dry-run", pipeline_cmd.dry_run, "Print the resolved config and exit");
    cmd->callback([&]() { rc = pipeline_cmd.run(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorCategory::usage);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return exit_code(ErrorCategory::internal);
  }
  return rc;
}

}  // namespace segkit::cli
