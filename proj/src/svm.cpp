#include "pqscreen/svm.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <numeric>

namespace pqscreen {

namespace {

class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t cache_bytes)
      : x_(x), gamma_(gamma), norms_(x.rowwise().squaredNorm()), rows_(static_cast<std::size_t>(x.rows())),
        where_(static_cast<std::size_t>(x.rows())) {
    const std::size_t row_bytes = static_cast<std::size_t>(x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, cache_bytes / std::max<std::size_t>(row_bytes, 1));
  }

  const Vector& row(std::size_t i) {
    if (rows_[i].size() != 0) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      rows_[victim] = Vector();
    }
    const auto xi = x_.row(static_cast<Eigen::Index>(i));
    Vector dist = (norms_.array() + norms_(static_cast<Eigen::Index>(i))).matrix() - 2.0 * (x_ * xi.transpose());
    rows_[i] = (-gamma_ * dist.array().max(0.0)).exp().matrix();
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return rows_[i];
  }

 private:
  const Matrix& x_;
  double gamma_;
  Vector norms_;
  std::vector<Vector> rows_;
  std::list<std::size_t> lru_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::size_t capacity_ = 2;
};

constexpr double kTau = 1e-12;

}  // namespace

void SvmModel::validate() const {
  const auto d = mean.size();
  if (scale.size() != d || support_vectors.cols() != d) throw Error("invalid_model", "svm dimension mismatch");
  if (support_vectors.rows() != dual_coefficients.size()) {
    throw Error("invalid_model", "support vector count differs from dual coefficient count");
  }
  if (!(gamma > 0.0) || !(c > 0.0) || !std::isfinite(bias)) throw Error("invalid_model", "invalid svm parameters");
  if (!support_vectors.allFinite() || !dual_coefficients.allFinite() || !mean.allFinite() || !scale.allFinite()) {
    throw Error("invalid_model", "svm model has non-finite values");
  }
  for (Eigen::Index i = 0; i < dual_coefficients.size(); ++i) {
    if (std::abs(dual_coefficients(i)) > c) throw Error("invalid_model", "dual coefficient exceeds the box constraint");
  }
}

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params, SvmSolution* solution) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const Eigen::Index d = x.cols();
  if (y.size() != n) throw Error("dimension", "row/label count mismatch");
  if (n == 0 || d == 0) throw Error("empty", "training matrix is empty");
  if (!x.allFinite()) throw Error("invalid_argument", "training matrix contains non-finite values");
  if (!(params.c > 0.0) || !std::isfinite(params.c)) throw Error("invalid_argument", "c must be positive");
  if (!(params.gamma >= 0.0) || !std::isfinite(params.gamma)) throw Error("invalid_argument", "gamma must be positive");
  if (!(params.tol > 0.0)) throw Error("invalid_argument", "tol must be positive");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw Error("invalid_argument", "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("single_class", "training data holds a single class");

  SvmModel model;
  model.c = params.c;
  model.gamma = params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(d);
  model.mean = x.colwise().mean().transpose();
  model.scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = std::sqrt((x.col(j).array() - model.mean(j)).square().mean());
    model.scale(j) = s > 0.0 ? s : 1.0;
  }

  // Internal order is a seeded permutation of the rows; it only affects
  // which of several equally violating pairs the solver picks first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  rng.shuffle(std::span<std::size_t>(order));
  Matrix xs(static_cast<Eigen::Index>(n), d);
  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs.row(static_cast<Eigen::Index>(k)) =
        (x.row(static_cast<Eigen::Index>(order[k])) - model.mean.transpose()).cwiseQuotient(model.scale.transpose());
    ys[k] = y[order[k]] ? 1.0 : -1.0;
  }

  KernelCache cache(xs, model.gamma, params.cache_mb * 1024 * 1024);
  const double c = params.c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  std::size_t iter = 0;
  double gap = 0.0;
  for (;;) {
    // Maximal violating pair over I_up and I_low.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (ys[t] > 0) {
        if (alpha[t] < c && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
        if (alpha[t] > 0 && grad[t] >= gmax2) { gmax2 = grad[t]; j = t; }
      } else {
        if (alpha[t] > 0 && grad[t] >= gmax) { gmax = grad[t]; i = t; }
        if (alpha[t] < c && -grad[t] >= gmax2) { gmax2 = -grad[t]; j = t; }
      }
    }
    gap = gmax + gmax2;
    if (i == n || j == n || gap < params.tol) break;
    if (iter >= params.max_iterations) {
      throw Error("convergence", "SMO did not converge within " + std::to_string(params.max_iterations) +
                                     " iterations (gap " + format_double(gap) + ")");
    }
    ++iter;

    const Vector& ki = cache.row(i);
    const Vector kic = ki;  // the next row() call may evict row i
    const Vector& kj = cache.row(j);
    const double kij = kic(static_cast<Eigen::Index>(j));
    const double old_i = alpha[i], old_j = alpha[j];
    if (ys[i] != ys[j]) {
      double quad = 2.0 + 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    // Q_ti = y_t y_i K_ti
    const double si = ys[i] * di;
    const double sj = ys[j] * dj;
    for (std::size_t t = 0; t < n; ++t) {
      const auto te = static_cast<Eigen::Index>(t);
      grad[t] += ys[t] * (si * kic(te) + sj * kj(te));
    }
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = ys[t] * grad[t];
    if (alpha[t] >= c) {
      if (ys[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (ys[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  model.bias = -rho;

  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) support.push_back(t);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(support.size()), d);
  model.dual_coefficients.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    model.support_vectors.row(static_cast<Eigen::Index>(k)) = xs.row(static_cast<Eigen::Index>(support[k]));
    model.dual_coefficients(static_cast<Eigen::Index>(k)) = ys[support[k]] * alpha[support[k]];
    model.support_indices.push_back(order[support[k]]);
  }

  if (solution) {
    solution->alpha.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) solution->alpha[order[k]] = alpha[k];
    solution->rho = rho;
    solution->gap = gap;
    solution->iterations = iter;
  }
  return model;
}

namespace {

double decision_standardized(const SvmModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  const Vector dist = (model.support_vectors.rowwise() - z).rowwise().squaredNorm();
  return model.dual_coefficients.dot((-model.gamma * dist.array()).exp().matrix()) + model.bias;
}

}  // namespace

double svm_decision(const SvmModel& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.mean.size())) {
    throw Error("dimension", "feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                                 std::to_string(model.mean.size()));
  }
  const Eigen::Map<const Eigen::RowVectorXd> raw(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::RowVectorXd z = (raw - model.mean.transpose()).cwiseQuotient(model.scale.transpose());
  return decision_standardized(model, z);
}

Vector svm_decisions(const SvmModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) throw Error("dimension", "column count mismatch");
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd z = (x.row(i) - model.mean.transpose()).cwiseQuotient(model.scale.transpose());
    out(i) = decision_standardized(model, z);
  }
  return out;
}

}  // namespace pqscreen
