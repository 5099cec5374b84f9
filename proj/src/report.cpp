#include "segkit/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segkit/errors.hpp"

namespace segkit {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double sample_std(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

}  // namespace

std::string case_report_json(const CaseReport& report) {
  std::ostringstream os;
  os << "{\n  \"case\": \"" << report.case_id << "\",\n  \"regions\": {\n";
  bool first_region = true;
  for (Region r : kAllRegions) {
    const RegionScores& s = report.region(r);
    if (!first_region) os << ",\n";
    first_region = false;
    os << "    \"" << to_string(r) << "\": {\n";
    os << "      \"dice\": " << fixed6(s.volume_dice) << ",\n";
    os << "      \"hd95_mm\": " << fixed6(s.volume_hd95_mm) << ",\n";
    os << "      \"lw_dice\": " << fixed6(s.lw_dice) << ",\n";
    os << "      \"lw_hd95_mm\": " << fixed6(s.lw_hd95_mm) << ",\n";
    os << "      \"n_lesions\": " << s.n_lesions << ",\n";
    os << "      \"n_fp\": " << s.n_fp << ",\n";
    os << "      \"entries\": [";
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
      const LesionEntry& e = s.entries[i];
      os << (i ? ",\n        " : "\n        ");
      os << "{\"gt_lesion_id\": " << e.gt_lesion_id << ", \"false_positive\": "
         << (e.false_positive ? "true" : "false") << ", \"gt_voxels\": " << e.gt_voxels
         << ", \"pred_voxels\": " << e.pred_voxels << ", \"pred_components\": [";
      for (std::size_t j = 0; j < e.pred_component_ids.size(); ++j)
        os << (j ? ", " : "") << e.pred_component_ids[j];
      os << "], \"dice\": " << fixed6(e.dice_value) << ", \"hd95_mm\": " << fixed6(e.hd95_mm)
         << "}";
    }
    os << (s.entries.empty() ? "]" : "\n      ]") << "\n    }";
  }
  os << "\n  }\n}\n";
  return os.str();
}

void write_case_report(const CaseReport& report, const std::string& path) {
  write_text_file(path, case_report_json(report));
}

std::string cohort_csv(const std::vector<CaseReport>& reports) {
  std::vector<const CaseReport*> ordered;
  ordered.reserve(reports.size());
  for (const auto& r : reports) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const CaseReport* a, const CaseReport* b) { return a->case_id < b->case_id; });

  std::ostringstream os;
  os << "case,region,dice,hd95,lw_dice,lw_hd95,n_lesions,n_fp\n";
  for (const CaseReport* r : ordered) {
    for (Region region : kAllRegions) {
      const RegionScores& s = r->region(region);
      os << r->case_id << ',' << to_string(region) << ',' << fixed6(s.volume_dice) << ','
         << fixed6(s.volume_hd95_mm) << ',' << fixed6(s.lw_dice) << ',' << fixed6(s.lw_hd95_mm)
         << ',' << s.n_lesions << ',' << s.n_fp << '\n';
    }
  }

  // Summary block in the layout of the challenge tables:
  // Mean, Std, 25th, Median, 75th per region.
  const char* stat_names[5] = {"Mean", "Std", "25th", "Median", "75th"};
  for (int stat = 0; stat < 5; ++stat) {
    for (Region region : kAllRegions) {
      std::vector<double> dice_v, hd_v, lwd_v, lwh_v, nles_v, nfp_v;
      for (const CaseReport* r : ordered) {
        const RegionScores& s = r->region(region);
        dice_v.push_back(s.volume_dice);
        hd_v.push_back(s.volume_hd95_mm);
        lwd_v.push_back(s.lw_dice);
        lwh_v.push_back(s.lw_hd95_mm);
        nles_v.push_back(s.n_lesions);
        nfp_v.push_back(s.n_fp);
      }
      auto apply = [&](std::vector<double> v) {
        switch (stat) {
          case 0: return mean_of(v);
          case 1: return sample_std(v, mean_of(v));
          case 2: return percentile(std::move(v), 25.0);
          case 3: return percentile(std::move(v), 50.0);
          default: return percentile(std::move(v), 75.0);
        }
      };
      os << stat_names[stat] << ',' << to_string(region) << ',' << fixed6(apply(dice_v)) << ','
         << fixed6(apply(hd_v)) << ',' << fixed6(apply(lwd_v)) << ',' << fixed6(apply(lwh_v))
         << ',' << fixed6(apply(nles_v)) << ',' << fixed6(apply(nfp_v)) << '\n';
    }
  }
  return os.str();
}

void write_cohort_csv(const std::vector<CaseReport>& reports, const std::string& path) {
  write_text_file(path, cohort_csv(reports));
}

void write_text_file(const std::string& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  const std::filesystem::path tmp(path + ".tmp" + std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error::io(path + ": cannot open for writing");
    out << content;
    if (!out) throw Error::io(path + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace segkit
