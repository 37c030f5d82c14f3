#pragma once

#include "pqscreen/tree.hpp"

#include <span>
#include <vector>

namespace pqscreen {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0: ceil(sqrt(p))
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  /// Seed of each tree's bootstrap draw; bootstrap_counts(seed, n_train)
  /// reproduces it.
  std::vector<std::uint64_t> bootstrap_seeds;
  double oob_error = 0.0;
  /// Mean over trees of the fraction of training rows left out of the bootstrap.
  double mean_oob_fraction = 0.0;
  std::size_t n_train = 0;
  std::size_t n_features = 0;
  ForestParams params;

  void validate() const;
};

/// Multiplicity of each of n rows in one bootstrap sample of size n.
std::vector<std::uint32_t> bootstrap_counts(std::uint64_t seed, std::size_t n);

/// Training rows missed by each tree's bootstrap.
std::vector<std::vector<std::uint32_t>> oob_rows(const ForestModel& model);

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params);

/// Fraction of trees voting PD.
double forest_score(const ForestModel& model, std::span<const double> x);
Vector forest_scores(const ForestModel& model, const Matrix& x);
/// Vote fraction >= 0.5 is PD.
int forest_predict(const ForestModel& model, std::span<const double> x);

/// Per-feature OOB permutation importance: mean over trees of the increase
/// in that tree's OOB error after permuting the feature among its OOB rows,
/// divided by the SD of those increases (0 when the SD is 0).
/// (x, y) must be the training data.
std::vector<double> permutation_importance(const ForestModel& model, const Matrix& x, std::span<const int> y,
                                           std::uint64_t seed);

}  // namespace pqscreen
