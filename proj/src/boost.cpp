#include "pqscreen/boost.hpp"

#include "pqscreen/logistic.hpp"

#include <cmath>
#include <numeric>

namespace pqscreen {

namespace {

// Stand-in error for a perfect round so its weight stays finite.
constexpr double kPerfectRoundError = 1e-10;

}  // namespace

void BoostModel::validate() const {
  if (weak_learners.empty()) throw Error("invalid_model", "boosted model has no learners");
  if (learner_weights.size() != weak_learners.size()) {
    throw Error("invalid_model", "learner weight count differs from learner count");
  }
  for (double a : learner_weights) {
    if (!std::isfinite(a) || !(a > 0.0)) throw Error("invalid_model", "learner weights must be finite and positive");
  }
}

double adaboost_alpha(double error) { return 0.5 * std::log((1.0 - error) / error); }

BoostModel fit_boosted(const Matrix& x, std::span<const int> y, const BoostParams& params,
                       std::vector<BoostRound>* trace) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) throw Error("dimension", "row/label count mismatch");
  if (n == 0 || x.cols() == 0) throw Error("empty", "training matrix is empty");
  if (!x.allFinite()) throw Error("invalid_argument", "training matrix contains non-finite values");
  if (params.max_depth < 1) throw Error("invalid_argument", "max_depth must be at least 1");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw Error("invalid_argument", "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("single_class", "training data holds a single class");

  BoostModel model;
  model.params = params;
  model.n_features = static_cast<std::size_t>(x.cols());
  const BinnedFeatures binned = BinnedFeatures::build(x);
  TreeGrowOptions options;
  options.max_depth = params.max_depth;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  const std::vector<std::uint32_t> ones(n, 1);
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  std::vector<char> wrong(n);

  for (std::size_t t = 0; t < params.n_rounds; ++t) {
    Rng rng(derive_seed(params.seed, 3, t));
    DecisionTree tree = grow_tree(binned, y, all, w, ones, options, rng);
    double error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = tree.vote(x, static_cast<Eigen::Index>(i)) != y[i];
      if (wrong[i]) error += w[i];
    }
    if (error >= 0.5) break;
    BoostRound round;
    if (trace) round.weights_before = w;
    const bool perfect = error <= 0.0;
    const double alpha = adaboost_alpha(perfect ? kPerfectRoundError : error);
    model.weak_learners.push_back(std::move(tree));
    model.learner_weights.push_back(alpha);
    if (!perfect) {
      // w * exp(+-alpha) / Z with Z = 2 sqrt(e (1 - e)), written in the
      // algebraically equal form that leaves the learner at error 0.5.
      const double up = 0.5 / error;
      const double down = 0.5 / (1.0 - error);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        w[i] *= wrong[i] ? up : down;
        total += w[i];
      }
      for (auto& v : w) v /= total;
    }
    if (trace) {
      round.weights_after = w;
      round.error = error;
      round.alpha = alpha;
      trace->push_back(std::move(round));
    }
    if (perfect) break;
  }
  if (model.weak_learners.empty()) {
    throw Error("not_learnable", "first weak learner has weighted error >= 0.5; boosting cannot proceed");
  }
  return model;
}

double boost_margin(const BoostModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error("dimension", "feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                                 std::to_string(model.n_features));
  }
  double margin = 0.0;
  for (std::size_t t = 0; t < model.weak_learners.size(); ++t) {
    margin += model.learner_weights[t] * (model.weak_learners[t].vote(x) ? 1.0 : -1.0);
  }
  return margin;
}

double boost_score(const BoostModel& model, std::span<const double> x) {
  const double total = std::accumulate(model.learner_weights.begin(), model.learner_weights.end(), 0.0);
  return sigmoid(boost_margin(model, x) / total);
}

Vector boost_scores(const BoostModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) throw Error("dimension", "column count mismatch");
  const double total = std::accumulate(model.learner_weights.begin(), model.learner_weights.end(), 0.0);
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double margin = 0.0;
    for (std::size_t t = 0; t < model.weak_learners.size(); ++t) {
      margin += model.learner_weights[t] * (model.weak_learners[t].vote(x, i) ? 1.0 : -1.0);
    }
    out(i) = sigmoid(margin / total);
  }
  return out;
}

}  // namespace pqscreen
