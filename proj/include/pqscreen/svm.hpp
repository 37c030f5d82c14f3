#pragma once

#include "pqscreen/common.hpp"

#include <span>
#include <vector>

namespace pqscreen {

struct SvmParams {
  double c = 1.0;
  double gamma = 0.0;  // 0: 1 / feature count
  double tol = 1e-3;
  std::uint64_t seed = 0;
  std::size_t cache_mb = 200;
  std::size_t max_iterations = 1'000'000;
};

/// C-SVC with an RBF kernel. Inputs are standardised with the training
/// mean and population SD before the kernel is applied.
struct SvmModel {
  Vector mean;
  Vector scale;
  Matrix support_vectors;  // standardised rows
  Vector dual_coefficients;  // y_i * alpha_i
  std::vector<std::size_t> support_indices;  // into the training rows
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;

  void validate() const;
};

/// Solver state at termination, for checking optimality.
struct SvmSolution {
  std::vector<double> alpha;  // one per training row
  double rho = 0.0;
  double gap = 0.0;  // max violating pair gap at exit
  std::size_t iterations = 0;
};

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params, SvmSolution* solution = nullptr);

/// Signed distance-like decision value; >= 0 is PD.
double svm_decision(const SvmModel& model, std::span<const double> x);
Vector svm_decisions(const SvmModel& model, const Matrix& x);

}  // namespace pqscreen
