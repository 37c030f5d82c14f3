#pragma once

#include "pqscreen/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pqscreen {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  int vote = 0;  // leaf class
  double pd_fraction = 0.0;  // weighted class-1 share of the node's training data
};

/// Binary classification tree over Gini splits.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  int vote(const Matrix& x, Eigen::Index row) const;
  /// Same, with column `feature` of the row replaced by `value`.
  int vote_with(const Matrix& x, Eigen::Index row, int feature, double value) const;
  int vote(std::span<const double> x) const;
  std::size_t leaf_count() const;
  int depth() const;
};

/// Per-column sorted distinct values and, per row, the value's rank.
/// Built once per training matrix and shared by every tree grown on it.
struct BinnedFeatures {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint32_t>> codes;
  std::size_t rows = 0;

  static BinnedFeatures build(const Matrix& x);
  std::size_t columns() const { return values.size(); }
};

struct TreeGrowOptions {
  std::size_t mtry = 0;  // candidate features per node; 0 means all
  int max_depth = -1;  // -1: unlimited
  std::size_t min_leaf = 1;  // minimum multiplicity-weighted rows per child
};

/// Grows one tree on `rows` (distinct row ids). Class totals use `weights`
/// and leaf sizes use `multiplicity` (bootstrap counts, or all ones).
/// Leaves vote class 1 on a weighted tie.
DecisionTree grow_tree(const BinnedFeatures& data, std::span<const int> y, std::vector<std::uint32_t> rows,
                       std::span<const double> weights, std::span<const std::uint32_t> multiplicity,
                       const TreeGrowOptions& options, Rng& rng);

}  // namespace pqscreen
