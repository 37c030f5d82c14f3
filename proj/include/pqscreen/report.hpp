#pragma once

#include "pqscreen/analysis.hpp"
#include "pqscreen/cv.hpp"

#include <json.hpp>

#include <ostream>
#include <vector>

namespace pqscreen {

nlohmann::json cv_config_json(const CvConfig& config);
CvConfig cv_config_from_json(const nlohmann::json& j);

nlohmann::json tune_result_json(const TuneResult& result);

/// Full report; `run_config` is embedded verbatim.
nlohmann::json report_to_json(const CVReport& report, const nlohmann::json& run_config = nlohmann::json::object());
CVReport report_from_json(const nlohmann::json& doc);
CVReport load_report(const std::string& path);

/// Writes `comment` (if non-empty) as a leading '#' line.
void write_comment(std::ostream& out, const std::string& comment);

/// One row per (repetition, fold).
void write_records_csv(std::ostream& out, const CVReport& report, const std::string& comment = {});
/// metric, scheme, selector, model, mean, ci_low, ci_high: one row per
/// metric and report.
void write_summary_csv(std::ostream& out, const std::vector<CVReport>& reports, const std::string& comment = {});
void write_comparison_csv(std::ostream& out, const std::vector<Comparison>& comparisons,
                          const std::string& comment = {});
/// Target versus achieved mean and SD per feature and class.
void write_moments_csv(std::ostream& out, const GroupMoments& target, const GroupMoments& achieved,
                       const std::string& comment = {});
void write_correlation_csv(std::ostream& out, const std::vector<CorrelationRow>& rows,
                           const std::string& comment = {});

}  // namespace pqscreen
