#include "pqscreen/logistic.hpp"

#include "pqscreen/cohort.hpp"

#include <Eigen/Cholesky>
#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace pqscreen {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

double log1pexp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw Error("dimension", "row/label count mismatch");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw Error("invalid_argument", "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("single_class", "logistic fit needs both classes");
}

double loglik(const Matrix& x, std::span<const int> y, const Vector& beta, double b0) {
  const Vector eta = (x * beta).array() + b0;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta(i) - log1pexp(eta(i));
  return ll;
}

}  // namespace

void LogisticModel::validate() const {
  if (static_cast<std::size_t>(coefficients.size()) != feature_names.size()) {
    throw Error("invalid_model", "coefficient count differs from feature name count");
  }
  if (!coefficients.allFinite() || !std::isfinite(intercept)) {
    throw Error("invalid_model", "logistic model has non-finite parameters");
  }
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                           const LogisticOptions& options) {
  check_labels(y, static_cast<std::size_t>(x.rows()));
  if (!x.allFinite()) throw Error("invalid_argument", "design matrix contains non-finite values");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (feature_names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) feature_names.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != p) throw Error("dimension", "feature name count mismatch");

  Vector scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = x.col(j).mean();
    scale(j) = std::sqrt((x.col(j).array() - m).square().sum() / static_cast<double>(n));
    if (!(scale(j) > 1e-12 * std::max(1.0, std::abs(m)))) {
      throw Error("singular", "column " + feature_names[j] + " is constant; design is singular");
    }
  }

  // Augmented design [1, X].
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  Vector beta = Vector::Zero(p + 1);
  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= static_cast<double>(n);
  beta(0) = std::log(ybar / (1.0 - ybar));
  Eigen::Map<const Eigen::VectorXi> yi(y.data(), n);
  const Vector yv = yi.cast<double>();

  LogisticModel model;
  model.feature_names = std::move(feature_names);
  double ll = loglik(x, y, beta.tail(p), beta(0));
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vector eta = design * beta;
    Vector prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
    const Vector score = design.transpose() * (yv - prob);
    model.iterations = iter;
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance) break;
    // Factor the information matrix rescaled to unit diagonal, so the
    // conditioning test does not depend on feature units.
    const Matrix hessian = design.transpose() * weight.asDiagonal() * design;
    const Vector d = hessian.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Matrix scaled = d.asDiagonal() * hessian * d.asDiagonal();
    scaled.diagonal().array() += 1e-10;
    Eigen::LLT<Matrix> llt(scaled);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-9) {
      throw Error("singular", "information matrix is singular (collinear design)");
    }
    const Vector step = d.asDiagonal() * llt.solve(d.asDiagonal() * score);
    double t = 1.0;
    bool improved = false;
    for (int half = 0; half < 50; ++half, t *= 0.5) {
      const Vector trial = beta + t * step;
      const double trial_ll = loglik(x, y, trial.tail(p), trial(0));
      // near the optimum the gain is below rounding; do not reject it
      if (trial_ll >= ll - 1e-12 * std::max(1.0, std::abs(ll))) {
        beta = trial;
        ll = trial_ll;
        improved = true;
        break;
      }
    }
    model.iterations = iter + 1;
    if (!improved) break;
    if ((beta.tail(p).cwiseProduct(scale)).cwiseAbs().maxCoeff() > 30.0) {
      model.separation_warning = true;
      break;
    }
  }
  model.intercept = beta(0);
  model.coefficients = beta.tail(p);
  return model;
}

ScoreBreakdown logistic_score(const LogisticModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.coefficients.size())) {
    throw Error("dimension", "feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                                 std::to_string(model.coefficients.size()));
  }
  ScoreBreakdown out;
  out.contributions.resize(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.contributions[i] = model.coefficients(static_cast<Eigen::Index>(i)) * x[i];
    sum += out.contributions[i];
  }
  out.linear_score = sum + model.intercept;
  out.probability = sigmoid(out.linear_score);
  return out;
}

double log_likelihood(const LogisticModel& model, const Matrix& x, std::span<const int> y) {
  if (x.cols() != model.coefficients.size()) throw Error("dimension", "design column count mismatch");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("dimension", "row/label count mismatch");
  return loglik(x, y, model.coefficients, model.intercept);
}

Vector score_vector(const LogisticModel& model, const Matrix& x, std::span<const int> y) {
  const Vector eta = (x * model.coefficients).array() + model.intercept;
  Vector g = Vector::Zero(x.cols() + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = y[i] - sigmoid(eta(i));
    g(0) += r;
    g.tail(x.cols()) += r * x.row(i).transpose();
  }
  return g;
}

double cox_snell_r2(double ll_null, double ll_model, double n) {
  return 1.0 - std::exp((2.0 / n) * (ll_null - ll_model));
}

double nagelkerke_r2(double ll_null, double ll_model, double n) {
  const double max_r2 = 1.0 - std::exp((2.0 / n) * ll_null);
  return cox_snell_r2(ll_null, ll_model, n) / max_r2;
}

FitDiagnostics goodness_of_fit(const LogisticModel& model, const Matrix& x, std::span<const int> y) {
  check_labels(y, static_cast<std::size_t>(x.rows()));
  FitDiagnostics d;
  const double n = static_cast<double>(y.size());
  double ones = 0.0;
  for (int v : y) ones += v;
  const double base = ones / n;
  // Same evaluation path as the model so an intercept-only model at the base
  // rate reproduces the null likelihood bit for bit.
  d.ll_null = loglik(x, y, Vector::Zero(x.cols()), std::log(base / (1.0 - base)));
  d.ll_model = log_likelihood(model, x, y);
  d.df = static_cast<std::size_t>(model.coefficients.size());
  d.model_chi_square = 2.0 * (d.ll_model - d.ll_null);
  d.cox_snell_r2 = cox_snell_r2(d.ll_null, d.ll_model, n);
  d.nagelkerke_r2 = nagelkerke_r2(d.ll_null, d.ll_model, n);
  if (d.df > 0 && d.model_chi_square > 0.0) {
    boost::math::chi_squared dist(static_cast<double>(d.df));
    d.p_value = boost::math::cdf(boost::math::complement(dist, d.model_chi_square));
  } else {
    d.p_value = 1.0;
  }
  return d;
}

LogisticModel published_pq_model() {
  // Canonical order: P1_SLPN ... P2_FREZ, GENDER, AGE.
  static constexpr double coefficients[kFeatureCount] = {
      -0.41803, 0.026638, -0.33983, 0.022716, 1.0682,  0.16622, -0.49868, 1.6894,
      0.7519,   0.90309,  2.2193,   1.4171,   2.1455,  1.1211,  0.57116,  0.70782,
      4.3677,   0.72112,  0.3455,   1.1776,   -0.41561, -0.031956};
  LogisticModel m;
  for (auto name : feature_names()) m.feature_names.emplace_back(name);
  m.coefficients = Eigen::Map<const Vector>(coefficients, kFeatureCount);
  m.intercept = 0.54813;
  return m;
}

}  // namespace pqscreen
