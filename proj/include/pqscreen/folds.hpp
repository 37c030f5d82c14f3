#pragma once

#include "pqscreen/cohort.hpp"

#include <span>
#include <vector>

namespace pqscreen {

enum class Scheme { SubjectWise, RecordWise };

std::string_view scheme_name(Scheme s);
Scheme parse_scheme(std::string_view text);

/// Stratified fold number for each unit. Units of each class are shuffled
/// and dealt round-robin, continuing the rotation across classes, so every
/// fold's class counts and total size are within one of ideal.
std::vector<std::size_t> stratified_assignment(std::span<const int> unit_labels, std::size_t k,
                                               std::uint64_t seed);

struct FoldPlan {
  Scheme scheme = Scheme::RecordWise;
  std::uint64_t seed = 0;
  /// Disjoint test-index sets covering every observation, each sorted.
  std::vector<std::vector<std::size_t>> folds;

  std::size_t k() const { return folds.size(); }
  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::size_t observation_count() const;
};

/// Grouping units are subjects (subject-wise) or observations (record-wise).
FoldPlan make_fold_plan(const Cohort& cohort, Scheme scheme, std::size_t k, std::uint64_t seed);

/// Same, over an explicit label vector and unit index per observation
/// (unit_of[i] in [0, units)). Used for inner splits of a training subset.
FoldPlan make_fold_plan(std::span<const int> labels, std::span<const std::size_t> unit_of, Scheme scheme,
                        std::size_t k, std::uint64_t seed);

}  // namespace pqscreen
