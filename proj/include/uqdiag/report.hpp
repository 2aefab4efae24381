#pragma once
// Table and report emission. Uncertainty prints with 3 decimals and
// percentages with 2, in both console tables and CSV, so the two views carry
// identical digits.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "intervention.hpp"
#include "util.hpp"

namespace uqdiag {

inline constexpr int kUncertaintyDecimals = 3;
inline constexpr int kPercentDecimals = 2;

// Clarification study, one row per label:
//   dataset,model,label,unc_before,unc_after,unc_reduction,unc_reduction_rate_pct
util::Csv clarify_table(const StudyReport& report, const std::string& dataset,
                        const std::string& model);

// Injection study, one overall row:
//   dataset,model,unc_before,acc_before_pct,unc_after,acc_after_pct,
//   unc_reduction_rate_pct,acc_improvement_rate_pct
util::Csv inject_table(const StudyReport& report, const std::string& dataset,
                       const std::string& model);

// Method comparison: method,n,ece,auroc,brier,n_bins
util::Csv calibration_table(const std::vector<CalibrationReport>& reports);

// Fixed-width console rendering of a CSV table.
std::string render_console_table(const util::Csv& csv);

// Markdown table with the same cells.
std::string render_markdown_table(const util::Csv& csv);

// Parses ConfidenceRecords from a CSV with header
// question_id,method,confidence,correct (method names or the short aliases
// VERB/PPL/SC; correct as 0/1/true/false).
std::vector<ConfidenceRecord> confidence_records_from_csv(const util::Csv& csv);
util::Csv confidence_records_to_csv(const std::vector<ConfidenceRecord>& records);

} // namespace uqdiag
