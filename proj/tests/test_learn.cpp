#include <doctest.h>

#include "pqscreen/boost.hpp"
#include "pqscreen/forest.hpp"
#include "pqscreen/logistic.hpp"
#include "pqscreen/model.hpp"
#include "pqscreen/svm.hpp"
#include "pqscreen/tree.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>

using namespace pqscreen;

namespace {

std::vector<double> row_of(const Matrix& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) r[static_cast<std::size_t>(j)] = x(i, j);
  return r;
}

Matrix xor_points() {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  return x;
}

const std::vector<int> kXorLabels{0, 1, 1, 0};

DecisionTree leaf(int vote) {
  DecisionTree t;
  TreeNode node;
  node.vote = vote;
  node.pd_fraction = vote;
  t.nodes.push_back(node);
  return t;
}

}  // namespace

// logistic --------------------------------------------------------------

TEST_CASE("logistic recovers a known two-feature model") {
  const auto s = pqtest::logistic_sample(20000, {1.0, -0.5}, 0.25, 101);
  const auto m = fit_logistic(s.x, s.y);
  CHECK(std::abs(m.coefficients(0) - 1.0) < 0.1);
  CHECK(std::abs(m.coefficients(1) + 0.5) < 0.1);
  CHECK(std::abs(m.intercept - 0.25) < 0.1);
  CHECK_FALSE(m.separation_warning);
  CHECK(score_vector(m, s.x, s.y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic on unrelated balanced data is near zero") {
  pqtest::Rng rng(4);
  Matrix x(4000, 2);
  std::vector<int> y(4000);
  for (Eigen::Index i = 0; i < 4000; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
  }
  const auto m = fit_logistic(x, y);
  CHECK(std::abs(m.intercept) < 0.1);
  CHECK(std::abs(m.coefficients(0)) < 0.1);
  CHECK(std::abs(m.coefficients(1)) < 0.1);
}

TEST_CASE("logistic input errors") {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  CHECK_THROWS_AS(fit_logistic(x, std::vector<int>{1, 1, 1, 1}), Error);
  Matrix constant(4, 2);
  constant << 1, 5, 2, 5, 3, 5, 4, 5;
  try {
    fit_logistic(constant, std::vector<int>{0, 1, 0, 1});
    FAIL("constant column accepted");
  } catch (const Error& e) {
    CHECK(e.code() == "singular");
  }
  Matrix dup(6, 2);
  dup << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6;
  CHECK_THROWS_AS(fit_logistic(dup, std::vector<int>{0, 1, 0, 1, 1, 0}), Error);
}

TEST_CASE("separable data raises the separation flag") {
  Matrix x(40, 1);
  std::vector<int> y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i >= 20;
  }
  const auto m = fit_logistic(x, y);
  CHECK(m.separation_warning);
  CHECK(goodness_of_fit(m, x, y).nagelkerke_r2 > 0.95);
}

TEST_CASE("analytic score matches central differences") {
  const auto s = pqtest::logistic_sample(500, {0.7, -0.3, 0.2}, 0.1, 8);
  pqtest::Rng rng(2);
  LogisticModel m;
  m.feature_names = {"a", "b", "c"};
  for (int point = 0; point < 5; ++point) {
    m.coefficients = Vector(3);
    for (int j = 0; j < 3; ++j) m.coefficients(j) = rng.normal();
    m.intercept = rng.normal();
    const Vector g = score_vector(m, s.x, s.y);
    const double h = 1e-5;
    for (int k = 0; k < 4; ++k) {
      LogisticModel up = m, down = m;
      if (k == 0) {
        up.intercept += h;
        down.intercept -= h;
      } else {
        up.coefficients(k - 1) += h;
        down.coefficients(k - 1) -= h;
      }
      const double fd = (log_likelihood(up, s.x, s.y) - log_likelihood(down, s.x, s.y)) / (2 * h);
      CHECK(std::abs(fd - g(k)) <= 1e-4 * std::max(1.0, std::abs(g(k))));
    }
  }
}

TEST_CASE("contributions sum to the linear score minus intercept") {
  const auto m = published_pq_model();
  pqtest::Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(kFeatureCount);
    for (std::size_t j = 0; j < kPqItemCount; ++j) x[j] = pqtest::uniform_int(rng, 0, 4);
    x[kGenderIndex] = static_cast<double>(rng.below(2));
    x[kAgeIndex] = 30 + 60 * rng.uniform();
    const auto s = logistic_score(m, x);
    const double sum = std::accumulate(s.contributions.begin(), s.contributions.end(), 0.0);
    CHECK(std::abs(sum - (s.linear_score - m.intercept)) <= 1e-12);
    CHECK(s.probability == doctest::Approx(1.0 / (1.0 + std::exp(-s.linear_score))));
  }
  CHECK_THROWS_AS(logistic_score(m, std::vector<double>(3)), Error);
}

TEST_CASE("published questionnaire model reference evaluations") {
  const auto m = published_pq_model();
  std::vector<double> x(kFeatureCount, 0.0);
  auto s = logistic_score(m, x);
  CHECK(s.linear_score == doctest::Approx(0.54813).epsilon(1e-12));
  CHECK(s.probability == doctest::Approx(0.6337).epsilon(1e-4));
  x[kAgeIndex] = 66.42;
  s = logistic_score(m, x);
  CHECK(s.linear_score == doctest::Approx(-1.5744).epsilon(1e-4));
  CHECK(s.probability == doctest::Approx(0.1716).epsilon(1e-3));
  x[kAgeIndex] = 66;
  x[kGenderIndex] = 1;
  x[16] = 4;
  s = logistic_score(m, x);
  CHECK(s.linear_score == doctest::Approx(15.494).epsilon(1e-4));
  CHECK(s.probability > 0.9999);
}

TEST_CASE("goodness of fit closed forms") {
  CHECK(cox_snell_r2(-69.31, -34.66, 100) == doctest::Approx(0.50).epsilon(1e-3));
  const double cs = cox_snell_r2(-69.31, -34.66, 100);
  CHECK(nagelkerke_r2(-69.31, -34.66, 100) == doctest::Approx(cs / (1 - std::exp(2.0 / 100 * -69.31))));
}

TEST_CASE("null model diagnostics are exactly zero") {
  const auto s = pqtest::logistic_sample(777, {0.5, 0.5}, -0.7, 3);
  const double rate = std::accumulate(s.y.begin(), s.y.end(), 0.0) / static_cast<double>(s.y.size());
  LogisticModel null;
  null.feature_names = {"a", "b"};
  null.coefficients = Vector::Zero(2);
  null.intercept = std::log(rate / (1 - rate));
  const auto d = goodness_of_fit(null, s.x, s.y);
  CHECK(d.model_chi_square == 0.0);
  CHECK(d.cox_snell_r2 == 0.0);
  CHECK(d.nagelkerke_r2 == 0.0);
  CHECK(d.df == 2);
}

TEST_CASE("nagelkerke is at least cox snell on fitted models") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    pqtest::Rng rng(seed);
    const std::vector<double> beta{rng.normal(), rng.normal(), 0.3 * rng.normal()};
    const auto s = pqtest::logistic_sample(200 + 50 * seed, beta, rng.normal(), seed);
    const auto m = fit_logistic(s.x, s.y);
    const auto d = goodness_of_fit(m, s.x, s.y);
    CHECK(d.cox_snell_r2 >= 0.0);
    CHECK(d.nagelkerke_r2 >= d.cox_snell_r2);
    CHECK(d.nagelkerke_r2 <= 1.0);
    CHECK(d.model_chi_square == doctest::Approx(2 * (d.ll_model - d.ll_null)));
    CHECK(d.p_value >= 0.0);
    CHECK(d.p_value <= 1.0);
  }
}

// trees -----------------------------------------------------------------

TEST_CASE("single tree fits separable data and keeps thresholds in range") {
  const auto s = pqtest::blobs(200, 3, 4.0, 1);
  const auto binned = BinnedFeatures::build(s.x);
  std::vector<std::uint32_t> rows(200);
  std::iota(rows.begin(), rows.end(), 0u);
  const std::vector<double> w(200, 1.0);
  const std::vector<std::uint32_t> mult(200, 1);
  Rng rng(1);
  const auto tree = grow_tree(binned, s.y, rows, w, mult, {}, rng);
  for (Eigen::Index i = 0; i < 200; ++i) CHECK(tree.vote(s.x, i) == s.y[i]);
  for (const auto& node : tree.nodes) {
    if (node.feature < 0) continue;
    CHECK(node.threshold >= s.x.col(node.feature).minCoeff());
    CHECK(node.threshold <= s.x.col(node.feature).maxCoeff());
  }
}

TEST_CASE("a tied leaf votes PD") {
  Matrix x(2, 1);
  x << 1, 1;
  const std::vector<int> y{0, 1};
  const auto binned = BinnedFeatures::build(x);
  const std::vector<double> w{1, 1};
  const std::vector<std::uint32_t> mult{1, 1};
  Rng rng(1);
  const auto tree = grow_tree(binned, y, {0, 1}, w, mult, {}, rng);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.vote(x, 0) == 1);
}

TEST_CASE("depth limit is honoured") {
  const auto s = pqtest::blobs(300, 4, 0.5, 2);
  const auto binned = BinnedFeatures::build(s.x);
  std::vector<std::uint32_t> rows(300);
  std::iota(rows.begin(), rows.end(), 0u);
  const std::vector<double> w(300, 1.0);
  const std::vector<std::uint32_t> mult(300, 1);
  for (int depth = 1; depth <= 4; ++depth) {
    TreeGrowOptions opt;
    opt.max_depth = depth;
    Rng rng(3);
    CHECK(grow_tree(binned, s.y, rows, w, mult, opt, rng).depth() <= depth);
  }
}

// forest ----------------------------------------------------------------

TEST_CASE("per-tree out-of-bag share is near 1/e") {
  const auto s = pqtest::blobs(1000, 3, 1.0, 5);
  ForestParams p;
  p.n_trees = 200;
  p.seed = 77;
  const auto f = fit_random_forest(s.x, s.y, p);
  CHECK(f.mean_oob_fraction >= 0.35);
  CHECK(f.mean_oob_fraction <= 0.39);
  // recount from the recorded bootstrap seeds
  double total = 0;
  for (auto seed : f.bootstrap_seeds) {
    const auto counts = bootstrap_counts(seed, 1000);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0u) == 1000u);
    total += static_cast<double>(std::count(counts.begin(), counts.end(), 0u)) / 1000.0;
  }
  CHECK(total / 200.0 == doctest::Approx(f.mean_oob_fraction).epsilon(1e-12));
}

TEST_CASE("one-tree forest counts every left-out row in the OOB error") {
  const auto s = pqtest::blobs(100, 2, 0.2, 6);
  ForestParams p;
  p.n_trees = 1;
  p.seed = 3;
  const auto f = fit_random_forest(s.x, s.y, p);
  const auto oob = oob_rows(f).front();
  REQUIRE_FALSE(oob.empty());
  std::size_t wrong = 0;
  for (auto r : oob) wrong += f.trees[0].vote(s.x, r) != s.y[r];
  CHECK(f.oob_error == doctest::Approx(static_cast<double>(wrong) / static_cast<double>(oob.size())));
}

TEST_CASE("forest on separable data") {
  const auto s = pqtest::blobs(300, 2, 6.0, 7);
  ForestParams p;
  p.n_trees = 100;
  p.seed = 1;
  const auto f = fit_random_forest(s.x, s.y, p);
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) CHECK(forest_predict(f, row_of(s.x, i)) == s.y[i]);
  CHECK(f.oob_error < 0.05);
}

TEST_CASE("forest training is bit reproducible") {
  const auto s = pqtest::blobs(200, 4, 0.8, 9);
  ForestParams p;
  p.n_trees = 30;
  p.seed = 5;
  const auto a = fit_random_forest(s.x, s.y, p);
  const auto b = fit_random_forest(s.x, s.y, p);
  CHECK(forest_scores(a, s.x) == forest_scores(b, s.x));
  CHECK(a.oob_error == b.oob_error);
  CHECK(a.bootstrap_seeds == b.bootstrap_seeds);
}

TEST_CASE("unanimous and tied forest votes") {
  ForestModel f;
  f.trees = {leaf(1), leaf(1)};
  f.bootstrap_seeds = {1, 2};
  f.n_features = 1;
  f.n_train = 2;
  const std::vector<double> x{0.0};
  CHECK(forest_score(f, x) == 1.0);
  f.trees = {leaf(1), leaf(0)};
  CHECK(forest_score(f, x) == 0.5);
  CHECK(forest_predict(f, x) == 1);
  CHECK_THROWS_AS(forest_score(f, std::vector<double>{1, 2}), Error);
}

TEST_CASE("permutation importance ranks the determining feature first") {
  pqtest::Rng rng(12);
  Matrix x(300, 4);
  std::vector<int> y(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y[i] = x(i, 2) > 0;
  }
  ForestParams p;
  p.n_trees = 500;
  p.seed = 4;
  const auto f = fit_random_forest(x, y, p);
  const auto imp = permutation_importance(f, x, y, 8);
  REQUIRE(imp.size() == 4);
  for (int j : {0, 1, 3}) {
    CHECK(imp[2] > imp[j]);
    CHECK(std::abs(imp[j]) <= 0.5);
  }
  CHECK_THROWS_AS(permutation_importance(f, x.leftCols(3), y, 8), Error);
}

// boosting --------------------------------------------------------------

TEST_CASE("learner weight closed form") {
  CHECK(adaboost_alpha(0.1) == doctest::Approx(0.5 * std::log(9.0)).epsilon(1e-14));
  CHECK(adaboost_alpha(0.1) == doctest::Approx(1.0986).epsilon(1e-4));
}

TEST_CASE("boosting halts with nothing learnable") {
  BoostParams p;
  p.max_depth = 1;
  try {
    fit_boosted(xor_points(), kXorLabels, p);
    FAIL("expected not_learnable");
  } catch (const Error& e) {
    CHECK(e.code() == "not_learnable");
  }
}

TEST_CASE("reweighting leaves each learner at one half") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = pqtest::blobs(150, 3, 0.7, seed);
    BoostParams p;
    p.n_rounds = 25;
    p.seed = seed;
    std::vector<BoostRound> trace;
    const auto m = fit_boosted(s.x, s.y, p, &trace);
    REQUIRE(trace.size() == m.weak_learners.size());
    for (std::size_t t = 0; t < trace.size(); ++t) {
      double err = 0;
      std::vector<double> oracle(trace[t].weights_before);
      double z = 0;
      for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
        const bool wrong = m.weak_learners[t].vote(s.x, i) != s.y[i];
        if (wrong) err += trace[t].weights_after[i];
        oracle[i] *= std::exp(wrong ? trace[t].alpha : -trace[t].alpha);
        z += oracle[i];
      }
      CHECK(std::abs(err - 0.5) <= 1e-10);
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(std::abs(oracle[i] / z - trace[t].weights_after[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("boosting training error stays under the exponential bound") {
  const auto s = pqtest::blobs(200, 2, 1.5, 3);
  BoostParams p;
  p.n_rounds = 40;
  std::vector<BoostRound> trace;
  const auto m = fit_boosted(s.x, s.y, p, &trace);
  double bound = 1.0;
  for (const auto& r : trace) bound *= 2 * std::sqrt(r.error * (1 - r.error));
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    wrong += (boost_margin(m, row_of(s.x, i)) >= 0) != (s.y[i] == 1);
  }
  CHECK(static_cast<double>(wrong) / 200.0 <= bound);
}

TEST_CASE("perfect weak learner stops boosting after one round") {
  const auto s = pqtest::blobs(100, 1, 20.0, 4);
  BoostParams p;
  p.n_rounds = 50;
  const auto m = fit_boosted(s.x, s.y, p);
  CHECK(m.weak_learners.size() == 1);
  CHECK(std::isfinite(m.learner_weights[0]));
  CHECK(m.learner_weights[0] > 0);
  for (Eigen::Index i = 0; i < 100; ++i) CHECK((boost_score(m, row_of(s.x, i)) >= 0.5) == (s.y[i] == 1));
}

// svm -------------------------------------------------------------------

TEST_CASE("xor needs every point as a support vector") {
  SvmParams p;
  p.c = 10;
  p.gamma = 1;
  const auto m = fit_svm(xor_points(), kXorLabels, p);
  CHECK(m.support_indices.size() == 4);
  const Matrix x = xor_points();
  for (Eigen::Index i = 0; i < 4; ++i) CHECK((svm_decision(m, row_of(x, i)) >= 0) == (kXorLabels[i] == 1));
}

TEST_CASE("wide margin data is classified by sign") {
  const auto s = pqtest::blobs(100, 3, 8.0, 10);
  SvmParams p;
  p.gamma = 0.01;
  const auto m = fit_svm(s.x, s.y, p);
  const Vector d = svm_decisions(m, s.x);
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK((d(i) >= 0) == (s.y[i] == 1));
}

TEST_CASE("duplicating the data with half the box leaves the decision function") {
  const auto s = pqtest::blobs(60, 2, 1.0, 11);
  Matrix twice(120, 2);
  twice << s.x, s.x;
  std::vector<int> y2(s.y);
  y2.insert(y2.end(), s.y.begin(), s.y.end());
  SvmParams p;
  p.c = 2;
  p.gamma = 0.5;
  const auto a = fit_svm(s.x, s.y, p);
  p.c = 1;
  const auto b = fit_svm(twice, y2, p);
  CHECK((svm_decisions(a, s.x) - svm_decisions(b, s.x)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("svm solution satisfies the optimality conditions") {
  pqtest::Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = pqtest::blobs(20 + 6 * trial, 2 + trial % 3, 0.8, 100 + trial);
    SvmParams p;
    p.c = std::pow(10.0, -1 + 3 * rng.uniform());
    p.gamma = std::pow(10.0, -1.5 + 2 * rng.uniform());
    SvmSolution sol;
    const auto m = fit_svm(s.x, s.y, p, &sol);
    double balance = 0;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
      CHECK(sol.alpha[i] >= 0.0);
      CHECK(sol.alpha[i] <= p.c);
      balance += sol.alpha[i] * (s.y[i] ? 1.0 : -1.0);
    }
    CHECK(std::abs(balance) <= 1e-8);
    const Vector d = svm_decisions(m, s.x);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double margin = (s.y[i] ? 1.0 : -1.0) * d(i);
      const double a = sol.alpha[static_cast<std::size_t>(i)];
      double violation = 0;
      if (a <= 0.0) violation = std::max(0.0, 1.0 - margin);
      else if (a >= p.c) violation = std::max(0.0, margin - 1.0);
      else violation = std::abs(margin - 1.0);
      CHECK(violation <= p.tol + 1e-9);
    }
  }
}

TEST_CASE("svm parameter errors") {
  SvmParams p;
  p.c = -1;
  CHECK_THROWS_AS(fit_svm(xor_points(), kXorLabels, p), Error);
  p.c = 1;
  CHECK_THROWS_AS(fit_svm(xor_points(), std::vector<int>{1, 1, 1, 1}, p), Error);
}

// model dispatch --------------------------------------------------------

TEST_CASE("every kind fits and scores through the common interface") {
  const auto s = pqtest::blobs(120, 3, 1.5, 13);
  for (ModelKind kind : {ModelKind::Logistic, ModelKind::Forest, ModelKind::Boost, ModelKind::Svm}) {
    const auto hp = default_hyperparameters(kind, 3);
    const Model m = fit_model(kind, s.x, s.y, hp, 99);
    CHECK(kind_of(m) == kind);
    CHECK(parse_model_kind(model_kind_name(kind)) == kind);
    CHECK(model_input_dimension(m) == 3);
    const Vector scores = predict_scores(m, s.x);
    std::size_t right = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      CHECK(scores(i) == predict_score(m, row_of(s.x, i)));
      right += (scores(i) >= decision_threshold(kind)) == (s.y[i] == 1);
    }
    CHECK(right >= 100);
  }
  CHECK(decision_threshold(ModelKind::Svm) == 0.0);
  CHECK(decision_threshold(ModelKind::Forest) == 0.5);
  CHECK(default_hyperparameters(ModelKind::Svm, 4).at("gamma") == 0.25);
  CHECK(default_hyperparameters(ModelKind::Logistic, 4).empty());
  CHECK_THROWS_AS(parse_model_kind("perceptron"), Error);
}

TEST_CASE("logistic model score delegates to the probability") {
  const auto s = pqtest::logistic_sample(300, {1.0}, 0.0, 3);
  const Model m = fit_model(ModelKind::Logistic, s.x, s.y, {}, 0);
  const std::vector<double> x{0.4};
  CHECK(predict_score(m, x) == logistic_score(std::get<LogisticModel>(m), x).probability);
}
