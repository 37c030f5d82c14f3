#include "pqscreen/tune.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pqscreen {

namespace {

constexpr double kMinLogLength = -4.605170185988091;  // log 0.01
constexpr double kMaxLogLength = 2.302585092994046;  // log 10
constexpr double kMinLogSignal = -4.605170185988091;
constexpr double kMaxLogSignal = 4.605170185988091;
constexpr double kMaxLogNoise = 0.0;

/// Plain Nelder-Mead minimiser; enough for a handful of kernel parameters.
template <class F>
std::vector<double> nelder_mead(F f, std::vector<double> start, double step, int max_evals) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);
  int evals = static_cast<int>(n + 1);
  std::vector<std::size_t> order(n + 1);
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    if (std::abs(values[worst] - values[best]) < 1e-9 * (1.0 + std::abs(values[best]))) break;
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };
    auto reflected = along(-1.0);
    const double fr = f(reflected);
    ++evals;
    if (fr < values[best]) {
      auto expanded = along(-2.0);
      const double fe = f(expanded);
      ++evals;
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
    } else {
      auto contracted = fr < values[worst] ? along(-0.5) : along(0.5);
      const double fc = f(contracted);
      ++evals;
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = std::move(contracted);
        values[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
          values[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  return simplex[static_cast<std::size_t>(it - values.begin())];
}

GaussianProcess::Hyper unpack(const std::vector<double>& theta, std::size_t d) {
  GaussianProcess::Hyper h;
  h.length_scales.resize(d);
  for (std::size_t k = 0; k < d; ++k) h.length_scales[k] = std::exp(std::clamp(theta[k], kMinLogLength, kMaxLogLength));
  h.signal_variance = std::exp(std::clamp(theta[d], kMinLogSignal, kMaxLogSignal));
  h.noise_variance =
      std::exp(std::clamp(theta[d + 1], std::log(GaussianProcess::kNoiseFloor), kMaxLogNoise));
  return h;
}

}  // namespace

double GaussianProcess::kernel(const Vector& a, const Vector& b) const {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double t = (a(k) - b(k)) / hyper_.length_scales[static_cast<std::size_t>(k)];
    s += t * t;
  }
  return hyper_.signal_variance * std::exp(-0.5 * s);
}

void GaussianProcess::factor() {
  const Eigen::Index m = x_.rows();
  Matrix k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(x_.row(i).transpose(), x_.row(j).transpose());
    }
  }
  double jitter = hyper_.noise_variance;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix kn = k;
    kn.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kn);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      alpha_ = llt.solve(y_);
      const double logdet = 2.0 * chol_.diagonal().array().log().sum();
      lml_ = -0.5 * y_.dot(alpha_) - 0.5 * logdet - 0.5 * static_cast<double>(m) * std::log(2.0 * std::numbers::pi);
      return;
    }
    jitter *= 10.0;
  }
  lml_ = -std::numeric_limits<double>::infinity();
  throw Error("singular", "GP covariance is not positive definite");
}

double GaussianProcess::evaluate_lml(const Hyper& hyper) {
  hyper_ = hyper;
  try {
    factor();
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
  return lml_;
}

void GaussianProcess::fit_fixed(const Matrix& x, const Vector& y, const Hyper& hyper) {
  if (x.rows() != y.size() || x.rows() == 0) throw Error("dimension", "GP training shape mismatch");
  x_ = x;
  y_mean_ = y.mean();
  const double var = (y.array() - y_mean_).square().mean();
  y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  y_ = (y.array() - y_mean_) / y_scale_;
  hyper_ = hyper;
  hyper_.noise_variance = std::max(hyper_.noise_variance, kNoiseFloor);
  factor();
}

void GaussianProcess::fit(const Matrix& x, const Vector& y, Rng& rng) {
  const std::size_t d = static_cast<std::size_t>(x.cols());
  Hyper start;
  start.length_scales.assign(d, 0.3);
  start.signal_variance = 1.0;
  start.noise_variance = 1e-4;
  fit_fixed(x, y, start);

  auto negative_lml = [&](const std::vector<double>& theta) {
    const double v = evaluate_lml(unpack(theta, d));
    return std::isfinite(v) ? -v : 1e300;
  };
  std::vector<std::vector<double>> starts;
  std::vector<double> s0(d + 2);
  for (std::size_t k = 0; k < d; ++k) s0[k] = std::log(0.3);
  s0[d] = 0.0;
  s0[d + 1] = std::log(1e-4);
  starts.push_back(s0);
  for (int r = 0; r < 2; ++r) {
    std::vector<double> s(d + 2);
    for (std::size_t k = 0; k < d; ++k) s[k] = kMinLogLength + rng.uniform() * (kMaxLogLength - kMinLogLength);
    s[d] = -1.0 + 2.0 * rng.uniform();
    s[d + 1] = std::log(kNoiseFloor) + rng.uniform() * (-std::log(kNoiseFloor) - 2.0);
    starts.push_back(std::move(s));
  }
  Hyper best = start;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const auto theta = nelder_mead(negative_lml, s, 0.5, 300);
    const Hyper h = unpack(theta, d);
    const double v = evaluate_lml(h);
    if (v > best_value) {
      best_value = v;
      best = h;
    }
  }
  hyper_ = best;
  factor();
}

std::pair<double, double> GaussianProcess::predict(const Vector& x) const {
  const Eigen::Index m = x_.rows();
  Vector k(m);
  for (Eigen::Index i = 0; i < m; ++i) k(i) = kernel(x_.row(i).transpose(), x);
  const double mean = k.dot(alpha_);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(k);
  const double var = std::max(hyper_.signal_variance - v.squaredNorm(), 0.0);
  return {y_mean_ + y_scale_ * mean, y_scale_ * std::sqrt(var)};
}

double expected_improvement(double mean, double sd, double best) {
  const double diff = best - mean;
  if (!(sd > 0.0)) return std::max(diff, 0.0);
  const double z = diff / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(diff * cdf + sd * pdf, 0.0);
}

}  // namespace pqscreen
