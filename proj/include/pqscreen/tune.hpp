#pragma once

#include "pqscreen/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pqscreen {

struct Dimension {
  std::string name;
  double low = 0.0;
  double high = 1.0;
  bool log_scale = false;
  bool integer = false;
};

struct SearchSpace {
  std::vector<Dimension> dimensions;

  std::size_t size() const { return dimensions.size(); }
  void validate() const;
  /// Map between the unit cube and the box (log dimensions are uniform in log).
  double from_unit(std::size_t d, double u) const;
  double to_unit(std::size_t d, double value) const;
};

/// Forest {n_trees, min_leaf}, boost {n_rounds, max_depth}, SVM {c, gamma};
/// logistic has nothing to tune and gets an empty space.
SearchSpace default_search_space(ModelKind kind);

struct TuneEvaluation {
  Hyperparameters point;
  double objective = 0.0;  // non-finite results are stored as kTunePenalty
};

inline constexpr double kTunePenalty = 1e10;

struct TuneResult {
  Hyperparameters best_point;
  double best_objective = 0.0;
  std::vector<TuneEvaluation> history;
};

using TuneObjective = std::function<double(const Hyperparameters&)>;

/// Gaussian-process Bayesian optimisation with expected improvement,
/// minimising `objective` over `space` in exactly `budget` evaluations.
TuneResult bayes_optimize(const TuneObjective& objective, const SearchSpace& space, std::size_t budget,
                          std::uint64_t seed);

/// Size of the quasi-random initial design: max(5, d + 1), capped by budget.
std::size_t initial_design_size(std::size_t dimensions, std::size_t budget);

/// Radical-inverse (Halton) coordinate of point `index` in `base`.
double halton(std::size_t index, unsigned base);

/// Zero-mean GP regression with a squared-exponential ARD kernel on unit
/// cube inputs. Targets are standardised internally.
class GaussianProcess {
 public:
  struct Hyper {
    std::vector<double> length_scales;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
  };

  static constexpr double kNoiseFloor = 1e-6;

  /// Fits kernel hyperparameters by maximising the log marginal likelihood.
  void fit(const Matrix& x, const Vector& y, Rng& rng);
  /// Uses fixed hyperparameters (noise clamped to the floor).
  void fit_fixed(const Matrix& x, const Vector& y, const Hyper& hyper);

  /// Posterior mean and standard deviation in the original target units.
  std::pair<double, double> predict(const Vector& x) const;
  double log_marginal_likelihood() const { return lml_; }
  const Hyper& hyper() const { return hyper_; }

 private:
  double kernel(const Vector& a, const Vector& b) const;
  double evaluate_lml(const Hyper& hyper);
  void factor();

  Matrix x_;
  Vector y_;  // standardised
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Hyper hyper_;
  Matrix chol_;  // lower factor of K + noise I
  Vector alpha_;
  double lml_ = 0.0;
};

/// Expected improvement below `best` for a Gaussian prediction (minimisation).
double expected_improvement(double mean, double sd, double best);

}  // namespace pqscreen
