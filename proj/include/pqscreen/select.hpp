#pragma once

#include "pqscreen/common.hpp"
#include "pqscreen/stats.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pqscreen {

/// Sorted, non-empty set of column indices kept by a selector.
struct FeatureMask {
  std::vector<std::size_t> selected;

  static FeatureMask all(std::size_t columns);
  /// Throws when empty or when an index is >= columns.
  void validate(std::size_t columns) const;
  Matrix apply(const Matrix& x) const;

  bool operator==(const FeatureMask&) const = default;
};

struct PcaTransform {
  Vector mean;
  /// p x r loading matrix; columns are the retained unit eigenvectors.
  Matrix components;
  /// All p eigenvalues of the sample covariance, descending.
  Vector eigenvalues;
  /// eigenvalue / trace for all p components.
  Vector explained_fraction;

  std::size_t retained() const { return static_cast<std::size_t>(components.cols()); }
  double retained_fraction() const;
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
};

using Selector = std::variant<FeatureMask, PcaTransform>;

Matrix apply_selector(const Selector& selector, const Matrix& x);
std::size_t input_dimension(const Selector& selector);

/// Per-column rank-sum tests, class 0 first.
std::vector<stats::TestResult> wilcoxon_screen(const Matrix& x, std::span<const int> y);

/// Keeps every column whose rank-sum p-value is below alpha (alpha >= 1
/// keeps every column). Throws Error("no_features") when nothing survives.
FeatureMask wilcoxon_filter(const Matrix& x, std::span<const int> y, double alpha = 0.05);

struct LassoOptions {
  /// Empty means the default grid: 100 log-spaced points from lambda_max
  /// down to lambda_max * 1e-4.
  std::vector<double> lambda_grid;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  double tolerance = 1e-7;
  int max_sweeps = 1000;
};

/// L1-penalised logistic fit. Coefficients are on the original feature
/// scale; the penalty applies to standardised features and not to the
/// intercept.
struct LassoFit {
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
  int sweeps = 0;
  bool converged = false;
  /// Penalised objective after each sweep (standardised scale).
  std::vector<double> objective_trace;
  /// Columns dropped for zero variance.
  std::vector<std::size_t> dropped;

  std::size_t nonzero() const;
};

/// Smallest lambda at which every standardised coefficient is zero.
double lasso_lambda_max(const Matrix& x, std::span<const int> y);
std::vector<double> default_lambda_grid(double lambda_max, std::size_t points = 100, double ratio = 1e-4);

LassoFit fit_lasso_logistic(const Matrix& x, std::span<const int> y, double lambda,
                            const LassoOptions& options = {});

struct LassoSelection {
  FeatureMask mask;
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cv_deviance;
  LassoFit fit;
  std::vector<std::string> warnings;
};

/// K-fold cross-validated lambda (minimum mean deviance); returns the
/// columns with nonzero coefficients at that lambda.
LassoSelection lasso_select(const Matrix& x, std::span<const int> y, const LassoOptions& options = {});

/// Centres (no scaling), eigendecomposes the sample covariance and keeps the
/// smallest leading set of components reaching variance_threshold.
PcaTransform pca_fit(const Matrix& x, double variance_threshold = 0.99);

}  // namespace pqscreen
