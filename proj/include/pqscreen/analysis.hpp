#pragma once

#include "pqscreen/cohort.hpp"
#include "pqscreen/cv.hpp"
#include "pqscreen/stats.hpp"

#include <string>
#include <vector>

namespace pqscreen {

struct ComparisonEntry {
  std::string label;  // "<selector>/<model>"
  MetricSummary summary;
  bool best = false;
  /// Tukey-Kramer interval against the best excludes zero.
  bool differs_from_best = false;
};

struct Comparison {
  std::string metric;
  double alpha = 0.05;
  stats::AnovaResult anova;
  std::vector<ComparisonEntry> entries;
  std::size_t best = 0;

  /// Indices of the best entry and every entry not significantly worse.
  std::vector<std::size_t> best_set() const;
};

/// One-way ANOVA and Tukey-Kramer over the per-record values of `metric`.
/// Reports must share the scheme and the record count.
Comparison compare_classifiers(const std::vector<CVReport>& reports, std::string_view metric, double alpha = 0.05);

std::string report_label(const CVReport& report);

/// AUC of the summed 20 PQ severities.
double total_score_baseline(const Cohort& cohort);

struct MisclassificationProfile {
  /// Rows counted as misclassified, per true class.
  std::vector<std::size_t> normal_rows;
  std::vector<std::size_t> pd_rows;
  SeverityHistogram normal;
  SeverityHistogram pd;
};

/// An observation counts as misclassified when it was wrongly predicted in
/// at least half of the repetitions. Identifiers must exist in the cohort.
MisclassificationProfile misclassification_profile(const CVReport& report, const Cohort& cohort);

struct CorrelationRow {
  std::string feature;
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool defined = true;  // false when the column is constant
};

/// Spearman rho of the 22 features, the PQ total and any SBR columns against
/// HY stage, over rows that carry HY.
std::vector<CorrelationRow> correlation_with_hy(const Cohort& cohort);

}  // namespace pqscreen
