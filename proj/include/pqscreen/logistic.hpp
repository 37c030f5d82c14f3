#pragma once

#include "pqscreen/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace pqscreen {

struct LogisticModel {
  std::vector<std::string> feature_names;
  Vector coefficients;
  double intercept = 0.0;
  /// Set when a standardised coefficient exceeded 30 in magnitude.
  bool separation_warning = false;
  int iterations = 0;

  void validate() const;
};

struct ScoreBreakdown {
  double probability = 0.0;
  double linear_score = 0.0;
  /// coefficient_i * x_i, in feature order.
  std::vector<double> contributions;
};

struct LogisticOptions {
  double score_tolerance = 1e-8;
  int max_iterations = 100;
};

/// Maximum-likelihood fit by iteratively reweighted least squares.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names = {},
                           const LogisticOptions& options = {});

ScoreBreakdown logistic_score(const LogisticModel& model, std::span<const double> x);

double sigmoid(double t);

/// Bernoulli log-likelihood of the model on (x, y).
double log_likelihood(const LogisticModel& model, const Matrix& x, std::span<const int> y);
/// Score vector (gradient of the log-likelihood), intercept first.
Vector score_vector(const LogisticModel& model, const Matrix& x, std::span<const int> y);

struct FitDiagnostics {
  double model_chi_square = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  double cox_snell_r2 = 0.0;
  double nagelkerke_r2 = 0.0;
  double ll_model = 0.0;
  double ll_null = 0.0;
};

FitDiagnostics goodness_of_fit(const LogisticModel& model, const Matrix& x, std::span<const int> y);

/// Closed forms shared with goodness_of_fit.
double cox_snell_r2(double ll_null, double ll_model, double n);
double nagelkerke_r2(double ll_null, double ll_model, double n);

/// The published 22-feature questionnaire model, coefficients as printed.
LogisticModel published_pq_model();

}  // namespace pqscreen
