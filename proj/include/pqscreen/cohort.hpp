#pragma once

#include "pqscreen/common.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pqscreen {

inline constexpr std::size_t kPqItemCount = 20;
inline constexpr std::size_t kFeatureCount = 22;
inline constexpr std::size_t kGenderIndex = 20;
inline constexpr std::size_t kAgeIndex = 21;
inline constexpr int kMaxSeverity = 4;

/// Canonical feature order: 7 Part-IB items, 13 Part-II items, GENDER, AGE.
const std::array<std::string_view, kFeatureCount>& feature_names();
/// Human-readable item names, same order as feature_names().
const std::array<std::string_view, kFeatureCount>& feature_titles();
std::optional<std::size_t> feature_index(std::string_view name);

enum class Label : int { Normal = 0, EarlyPD = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }
std::string_view label_name(Label l);

struct FeatureVector {
  std::array<int, kPqItemCount> pq_items{};
  double age = 0.0;
  int gender = 0;

  /// Throws Error("range") naming the offending field.
  void validate() const;
  /// The 22 canonical features as reals.
  std::array<double, kFeatureCount> as_reals() const;
  int total_score() const;

  bool operator==(const FeatureVector&) const = default;
};

struct Observation {
  std::string subject_id;
  int visit_index = 0;
  FeatureVector features;
  Label label = Label::Normal;
  std::optional<double> hy_stage;
  /// Right caudate, left caudate, right putamen, left putamen.
  std::optional<std::array<double, 4>> sbr;

  bool operator==(const Observation&) const = default;
};

/// Immutable, validated observation table.
class Cohort {
 public:
  /// Validates feature ranges, (subject, visit) uniqueness and per-subject
  /// label consistency.
  explicit Cohort(std::vector<Observation> observations);

  const std::vector<Observation>& observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }

  std::size_t count(Label label) const;
  bool has_both_classes() const { return count(Label::Normal) > 0 && count(Label::EarlyPD) > 0; }
  bool has_hy() const;

  /// n x 22 design matrix in canonical feature order.
  Matrix feature_matrix() const;
  std::vector<int> labels() const;
  /// Dense subject number per observation (first-appearance order).
  const std::vector<std::size_t>& subject_index() const { return subject_index_; }
  std::size_t subject_count() const { return subject_count_; }

  Cohort subset(std::span<const std::size_t> rows) const;
  std::optional<std::size_t> find(std::string_view subject_id, int visit) const;

  bool operator==(const Cohort& other) const { return observations_ == other.observations_; }

 private:
  std::vector<Observation> observations_;
  std::vector<std::size_t> subject_index_;
  std::size_t subject_count_ = 0;
};

/// Maps canonical column names to the names used in a file. Columns not
/// mentioned are looked up under their canonical name.
struct ColumnMapping {
  std::map<std::string, std::string> renames;

  std::string column_for(std::string_view canonical) const;
};

Cohort read_cohort(std::istream& in, const ColumnMapping& mapping = {});
Cohort load_cohort(const std::string& path, const ColumnMapping& mapping = {});
/// Writes the canonical CSV. `comment`, when non-empty, is emitted as a
/// leading '#' line (the reader skips such lines).
void write_cohort(std::ostream& out, const Cohort& cohort, const std::string& comment = {});
void save_cohort(const std::string& path, const Cohort& cohort, const std::string& comment = {});

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

/// Per feature (canonical order) and per class target moments.
struct GroupMoments {
  std::array<std::array<Moments, 2>, kFeatureCount> by_feature{};

  const Moments& at(std::size_t feature, Label label) const {
    return by_feature[feature][to_int(label)];
  }
  Moments& at(std::size_t feature, Label label) { return by_feature[feature][to_int(label)]; }
  void validate() const;
};

/// Healthy-control and early-PD moments as published for the PQ cohort.
GroupMoments published_moments();
/// Sample moments (mean, SD with n-1) of an existing cohort.
GroupMoments compute_moments(const Cohort& cohort);

/// Probability mass over severities 0..4 matching a target mean and SD.
/// Throws Error("infeasible_moments") when no distribution on {0..4}
/// attains the target.
std::array<double, 5> severity_pmf(const Moments& target);

struct SynthesisOptions {
  std::size_t n_normal_subjects = 198;
  std::size_t n_pd_subjects = 474;
  double visits_normal = 5.06;
  double visits_pd = 9.92;
  std::uint64_t seed = 0;
  double age_min = 30.0;
  double age_max = 100.0;
};

Cohort synthesize_cohort(const GroupMoments& moments, const SynthesisOptions& options);

using SeverityHistogram = std::array<std::array<std::size_t, 5>, kPqItemCount>;

/// Per-item counts over severities 0..4 for one class.
SeverityHistogram severity_distribution(const Cohort& cohort, Label label);
/// Same, restricted to the given rows. An empty row set yields all-zero bins.
SeverityHistogram severity_distribution(const Cohort& cohort, Label label,
                                        std::span<const std::size_t> rows);

struct FeatureValue {
  std::string feature;
  double value = 0.0;
};

/// Percentage of Normal observations at severity 0 minus the same
/// percentage for EarlyPD, per PQ item.
std::vector<FeatureValue> normal_behavior_gap(const Cohort& cohort);

}  // namespace pqscreen
