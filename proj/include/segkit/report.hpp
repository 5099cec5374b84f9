#pragma once

#include <string>
#include <vector>

#include "segkit/metrics.hpp"

namespace segkit {

// Reports are emitted with fixed-width decimals so reruns diff cleanly.
std::string case_report_json(const CaseReport& report);
void write_case_report(const CaseReport& report, const std::string& path);

// One row per (case, region) in case-id order, followed by
// Mean/Std/25th/Median/75th summary rows per region.
std::string cohort_csv(const std::vector<CaseReport>& reports);
void write_cohort_csv(const std::vector<CaseReport>& reports, const std::string& path);

// Atomic text write (temp file + rename).
void write_text_file(const std::string& path, const std::string& content);

}  // namespace segkit
