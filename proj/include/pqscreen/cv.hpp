#pragma once

#include "pqscreen/cohort.hpp"
#include "pqscreen/folds.hpp"
#include "pqscreen/model.hpp"
#include "pqscreen/select.hpp"
#include "pqscreen/tune.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pqscreen {

enum class SelectorKind { Wilcoxon, Lasso, Pca };

std::string_view selector_kind_name(SelectorKind kind);
SelectorKind parse_selector_kind(std::string_view text);

/// Confidence intervals over every (repetition, fold) record, or over the
/// per-repetition means.
enum class CiUnit { Record, Repetition };

std::string_view ci_unit_name(CiUnit unit);
CiUnit parse_ci_unit(std::string_view text);

struct CvConfig {
  Scheme scheme = Scheme::RecordWise;
  SelectorKind selector = SelectorKind::Wilcoxon;
  ModelKind model = ModelKind::Logistic;
  std::size_t k = 10;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  /// Evaluations per outer fold; 0 fits the untuned defaults.
  std::size_t tune_budget = 30;
  std::size_t inner_k = 10;
  double wilcoxon_alpha = 0.05;
  double pca_threshold = 0.99;
  CiUnit ci_unit = CiUnit::Record;
  std::size_t jobs = 1;
};

struct MetricRecord {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  /// Canonical names kept by a mask selector, or "PC1".."PCr".
  std::vector<std::string> selected_features;
  Hyperparameters hyperparameters;
  /// Present when the fold was tuned.
  std::optional<TuneResult> tuning;
};

struct Misclassification {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t observation = 0;  // row in the cohort
  std::string subject_id;
  int visit = 0;
  int true_label = 0;
  int predicted_label = 0;
  double score = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline constexpr const char* kMetricNames[] = {"accuracy", "sensitivity", "specificity", "auc"};

double metric_value(const MetricRecord& record, std::string_view metric);

struct CVReport {
  CvConfig config;
  std::vector<MetricRecord> records;  // ordered by (repetition, fold)
  std::map<std::string, MetricSummary> aggregates;
  std::vector<Misclassification> misclassified;  // ordered by (repetition, fold, observation)
  std::string data_fingerprint;
  std::string data_path;
};

/// Mean and 95% CI per metric over the records (or per-repetition means).
std::map<std::string, MetricSummary> aggregate_records(const std::vector<MetricRecord>& records, CiUnit unit);

/// Outer k-fold CV repeated with fresh stratified plans; the selector and
/// tuning see only outer-training data.
CVReport run_nested_cv(const Cohort& cohort, const CvConfig& config);

/// The feature-selection step on its own, as done inside each outer fold.
Selector fit_selector(SelectorKind kind, const Matrix& x, std::span<const int> y, const CvConfig& config,
                      std::uint64_t seed);

/// Inner objective used when tuning: OOB error for forests, inner k-fold
/// error for the others. `unit_of` gives each training row's grouping unit.
double tuning_objective(ModelKind kind, const Matrix& z, std::span<const int> y, std::span<const std::size_t> unit_of,
                        Scheme scheme, std::size_t inner_k, const Hyperparameters& hp, std::uint64_t seed);

}  // namespace pqscreen
