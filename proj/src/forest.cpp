#include "pqscreen/forest.hpp"

#include <cmath>
#include <numeric>

namespace pqscreen {

namespace {

void check_training_data(const Matrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("dimension", "row/label count mismatch");
  if (x.rows() == 0 || x.cols() == 0) throw Error("empty", "training matrix is empty");
  if (!x.allFinite()) throw Error("invalid_argument", "training matrix contains non-finite values");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw Error("invalid_argument", "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("single_class", "training data holds a single class");
}

}  // namespace

void ForestModel::validate() const {
  if (trees.empty()) throw Error("invalid_model", "forest has no trees");
  if (bootstrap_seeds.size() != trees.size()) throw Error("invalid_model", "bootstrap seed count differs from tree count");
  if (!(oob_error >= 0.0 && oob_error <= 1.0)) throw Error("invalid_model", "oob_error outside [0,1]");
  for (const auto& t : trees) {
    if (t.nodes.empty()) throw Error("invalid_model", "empty tree");
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      if (n.feature < 0) continue;
      if (static_cast<std::size_t>(n.feature) >= n_features || n.left <= static_cast<int>(i) ||
          n.right <= static_cast<int>(i) || n.left >= static_cast<int>(t.nodes.size()) ||
          n.right >= static_cast<int>(t.nodes.size()) || !std::isfinite(n.threshold)) {
        throw Error("invalid_model", "malformed tree node");
      }
    }
  }
}

std::vector<std::uint32_t> bootstrap_counts(std::uint64_t seed, std::size_t n) {
  std::vector<std::uint32_t> counts(n, 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
  return counts;
}

std::vector<std::vector<std::uint32_t>> oob_rows(const ForestModel& model) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(model.trees.size());
  for (auto seed : model.bootstrap_seeds) {
    const auto counts = bootstrap_counts(seed, model.n_train);
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) rows.push_back(static_cast<std::uint32_t>(i));
    }
    out.push_back(std::move(rows));
  }
  return out;
}

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y, const ForestParams& params) {
  check_training_data(x, y);
  if (params.n_trees < 1) throw Error("invalid_argument", "n_trees must be at least 1");
  if (params.min_leaf < 1) throw Error("invalid_argument", "min_leaf must be at least 1");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());

  ForestModel model;
  model.params = params;
  model.n_train = n;
  model.n_features = p;
  const BinnedFeatures binned = BinnedFeatures::build(x);
  TreeGrowOptions options;
  options.mtry = params.max_features == 0 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))))
                                          : params.max_features;
  options.min_leaf = params.min_leaf;

  std::vector<std::size_t> oob_votes(n, 0), oob_pd(n, 0);
  std::vector<double> weights(n);
  double oob_fraction_sum = 0.0;
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t boot_seed = derive_seed(params.seed, 1, t);
    const auto counts = bootstrap_counts(boot_seed, n);
    std::vector<std::uint32_t> rows;
    std::size_t oob = 0;
    for (std::size_t i = 0; i < n; ++i) {
      weights[i] = counts[i];
      if (counts[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
      else ++oob;
    }
    Rng rng(derive_seed(params.seed, 2, t));
    DecisionTree tree = grow_tree(binned, y, std::move(rows), weights, counts, options, rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] != 0) continue;
      ++oob_votes[i];
      oob_pd[i] += static_cast<std::size_t>(tree.vote(x, static_cast<Eigen::Index>(i)));
    }
    oob_fraction_sum += static_cast<double>(oob) / static_cast<double>(n);
    model.trees.push_back(std::move(tree));
    model.bootstrap_seeds.push_back(boot_seed);
  }

  std::size_t counted = 0, wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (oob_votes[i] == 0) continue;
    ++counted;
    const int predicted = 2 * oob_pd[i] >= oob_votes[i] ? 1 : 0;
    if (predicted != y[i]) ++wrong;
  }
  model.oob_error = counted == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(counted);
  model.mean_oob_fraction = oob_fraction_sum / static_cast<double>(params.n_trees);
  return model;
}

double forest_score(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error("dimension", "feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                                 std::to_string(model.n_features));
  }
  std::size_t pd = 0;
  for (const auto& t : model.trees) pd += static_cast<std::size_t>(t.vote(x));
  return static_cast<double>(pd) / static_cast<double>(model.trees.size());
}

Vector forest_scores(const ForestModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) throw Error("dimension", "column count mismatch");
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::size_t pd = 0;
    for (const auto& t : model.trees) pd += static_cast<std::size_t>(t.vote(x, i));
    out(i) = static_cast<double>(pd) / static_cast<double>(model.trees.size());
  }
  return out;
}

int forest_predict(const ForestModel& model, std::span<const double> x) {
  return forest_score(model, x) >= 0.5 ? 1 : 0;
}

std::vector<double> permutation_importance(const ForestModel& model, const Matrix& x, std::span<const int> y,
                                           std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != model.n_train || static_cast<std::size_t>(x.cols()) != model.n_features) {
    throw Error("dimension", "importance data shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                 " differs from training shape " + std::to_string(model.n_train) + "x" +
                                 std::to_string(model.n_features));
  }
  if (y.size() != model.n_train) throw Error("dimension", "row/label count mismatch");
  const auto oob = oob_rows(model);
  const std::size_t p = model.n_features;
  std::vector<std::vector<double>> diffs(p);
  std::vector<double> column;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& rows = oob[t];
    if (rows.empty()) continue;
    const auto& tree = model.trees[t];
    std::size_t base_wrong = 0;
    for (auto r : rows) base_wrong += tree.vote(x, r) != y[r];
    const double m = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < p; ++j) {
      column.resize(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) column[k] = x(rows[k], static_cast<Eigen::Index>(j));
      Rng rng(derive_seed(seed, j + 1, t));
      rng.shuffle(std::span<double>(column));
      std::size_t wrong = 0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        wrong += tree.vote_with(x, rows[k], static_cast<int>(j), column[k]) != y[rows[k]];
      }
      diffs[j].push_back((static_cast<double>(wrong) - static_cast<double>(base_wrong)) / m);
    }
  }
  std::vector<double> scores(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& d = diffs[j];
    if (d.size() < 2) continue;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
    scores[j] = sd > 0.0 ? mean / sd : 0.0;
  }
  return scores;
}

}  // namespace pqscreen
