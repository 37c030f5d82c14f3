#pragma once

#include "pqscreen/tree.hpp"

#include <span>
#include <vector>

namespace pqscreen {

struct BoostParams {
  std::size_t n_rounds = 100;
  int max_depth = 2;
  std::uint64_t seed = 0;
};

/// AdaBoost.M1 over depth-limited trees.
struct BoostModel {
  std::vector<DecisionTree> weak_learners;
  std::vector<double> learner_weights;
  std::size_t n_features = 0;
  BoostParams params;

  void validate() const;
};

/// Per-round record kept when requested: the weights a learner was fitted
/// under, its weighted error, and the weights after reweighting.
struct BoostRound {
  std::vector<double> weights_before;
  std::vector<double> weights_after;
  double error = 0.0;
  double alpha = 0.0;
};

BoostModel fit_boosted(const Matrix& x, std::span<const int> y, const BoostParams& params,
                       std::vector<BoostRound>* trace = nullptr);

/// Learner weight for weighted error e in (0, 0.5).
double adaboost_alpha(double error);

/// Signed margin sum_t alpha_t h_t(x), h in {-1, +1}.
double boost_margin(const BoostModel& model, std::span<const double> x);
/// Logistic of the margin divided by the total learner weight.
double boost_score(const BoostModel& model, std::span<const double> x);
Vector boost_scores(const BoostModel& model, const Matrix& x);

}  // namespace pqscreen
