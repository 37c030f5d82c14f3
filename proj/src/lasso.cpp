#include "pqscreen/folds.hpp"
#include "pqscreen/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pqscreen {

namespace {

double log1pexp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}
// The slack keeps rounding noise in the gradient from activating a
// coordinate that sits exactly on the KKT boundary (e.g. at lambda_max).
double soft_threshold(double v, double lambda) {
  const double edge = lambda * (1.0 + 1e-10);
  if (v > edge) return v - lambda;
  if (v < -edge) return v + lambda;
  return 0.0;
}

struct Standardized {
  Matrix z;  // kept columns only
  Vector mean;
  Vector scale;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};

Standardized standardize(const Matrix& x) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).mean();
    const double var = (x.col(j).array() - m).square().sum() / n;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) {
      s.dropped.push_back(static_cast<std::size_t>(j));
    } else {
      s.kept.push_back(static_cast<std::size_t>(j));
    }
  }
  s.z.resize(x.rows(), static_cast<Eigen::Index>(s.kept.size()));
  s.mean.resize(static_cast<Eigen::Index>(s.kept.size()));
  s.scale.resize(static_cast<Eigen::Index>(s.kept.size()));
  for (std::size_t c = 0; c < s.kept.size(); ++c) {
    const auto j = static_cast<Eigen::Index>(s.kept[c]);
    const auto ci = static_cast<Eigen::Index>(c);
    s.mean(ci) = x.col(j).mean();
    s.scale(ci) = std::sqrt((x.col(j).array() - s.mean(ci)).square().sum() / n);
    s.z.col(ci) = (x.col(j).array() - s.mean(ci)) / s.scale(ci);
  }
  return s;
}

// Coordinate descent on (1/n) * logistic loss + lambda * |beta|_1 with
// per-coordinate Newton proposals and a backtracking safeguard, so the
// objective never increases.
class CoordinateDescent {
 public:
  CoordinateDescent(const Matrix& z, std::span<const int> y) : z_(z), y_(y), n_(static_cast<double>(z.rows())) {
    beta_ = Vector::Zero(z.cols());
    double ybar = 0.0;
    for (int v : y) ybar += v;
    ybar /= n_;
    ybar = std::clamp(ybar, 1e-12, 1.0 - 1e-12);
    intercept_ = std::log(ybar / (1.0 - ybar));
    eta_ = Vector::Constant(z.rows(), intercept_);
    // A column equal to an earlier one (up to sign) stays at zero.
    shadowed_.assign(static_cast<std::size_t>(z.cols()), false);
    for (Eigen::Index j = 1; j < z.cols(); ++j) {
      for (Eigen::Index e = 0; e < j && !shadowed_[static_cast<std::size_t>(j)]; ++e) {
        if ((z.col(j) - z.col(e)).cwiseAbs().maxCoeff() <= 1e-12 ||
            (z.col(j) + z.col(e)).cwiseAbs().maxCoeff() <= 1e-12) {
          shadowed_[static_cast<std::size_t>(j)] = true;
        }
      }
    }
  }

  double penalised(double lambda) const { return loss(eta_) + lambda * beta_.lpNorm<1>(); }

  /// One full sweep; returns the largest absolute parameter change.
  double sweep(double lambda) {
    double max_change = update_intercept();
    for (Eigen::Index j = 0; j < z_.cols(); ++j) {
      if (!shadowed_[static_cast<std::size_t>(j)]) max_change = std::max(max_change, update_coordinate(j, lambda));
    }
    return max_change;
  }

  const Vector& beta() const { return beta_; }
  double intercept() const { return intercept_; }

 private:
  double loss(const Vector& eta) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += log1pexp(eta(i)) - y_[i] * eta(i);
    return total / n_;
  }

  double line_loss(const double* direction, double delta) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
      const double e = eta_(i) + delta * (direction ? direction[i] : 1.0);
      total += log1pexp(e) - y_[i] * e;
    }
    return total / n_;
  }

  double update_intercept() {
    double g = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
      const double p = sigmoid(eta_(i));
      g += p - y_[i];
      h += p * (1.0 - p);
    }
    g /= n_;
    h = std::max(h / n_, 1e-12);
    double step = -g / h;
    if (step == 0.0) return 0.0;
    const double base = loss(eta_);
    for (int t = 0; t < 40; ++t, step *= 0.5) {
      if (line_loss(nullptr, step) <= base) {
        intercept_ += step;
        eta_.array() += step;
        return std::abs(step);
      }
    }
    return 0.0;
  }

  double update_coordinate(Eigen::Index j, double lambda) {
    const auto col = z_.col(j);
    double g = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < eta_.size(); ++i) {
      const double p = sigmoid(eta_(i));
      g += col(i) * (p - y_[i]);
      h += p * (1.0 - p) * col(i) * col(i);
    }
    g /= n_;
    h = std::max(h / n_, 1e-12);
    const double old = beta_(j);
    const double proposal = soft_threshold(h * old - g, lambda) / h;
    if (proposal == old) return 0.0;
    const double* direction = col.data();
    const double base = loss(eta_) + lambda * std::abs(old);
    double delta = proposal - old;
    for (int t = 0; t < 40; ++t, delta *= 0.5) {
      const double candidate = old + delta;
      if (line_loss(direction, delta) + lambda * std::abs(candidate) <= base) {
        beta_(j) = candidate;
        eta_ += delta * col;
        return std::abs(delta);
      }
    }
    return 0.0;
  }

  const Matrix& z_;
  std::span<const int> y_;
  double n_;
  Vector beta_;
  double intercept_ = 0.0;
  Vector eta_;
  std::vector<bool> shadowed_;
};

struct PathPoint {
  Vector beta;  // standardised scale, kept columns
  double intercept = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> trace;
};

std::vector<PathPoint> fit_path(const Matrix& z, std::span<const int> y, const std::vector<double>& grid,
                                const LassoOptions& options) {
  CoordinateDescent cd(z, y);
  std::vector<PathPoint> path;
  path.reserve(grid.size());
  for (double lambda : grid) {
    PathPoint pt;
    for (int s = 0; s < options.max_sweeps; ++s) {
      const double change = cd.sweep(lambda);
      pt.trace.push_back(cd.penalised(lambda));
      ++pt.sweeps;
      if (change < options.tolerance) {
        pt.converged = true;
        break;
      }
    }
    pt.beta = cd.beta();
    pt.intercept = cd.intercept();
    path.push_back(std::move(pt));
  }
  return path;
}

LassoFit to_original_scale(const Standardized& s, const PathPoint& pt, double lambda, std::size_t columns) {
  LassoFit fit;
  fit.coefficients = Vector::Zero(static_cast<Eigen::Index>(columns));
  fit.intercept = pt.intercept;
  for (std::size_t c = 0; c < s.kept.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double b = pt.beta(ci) / s.scale(ci);
    fit.coefficients(static_cast<Eigen::Index>(s.kept[c])) = b;
    fit.intercept -= b * s.mean(ci);
  }
  fit.lambda = lambda;
  fit.sweeps = pt.sweeps;
  fit.converged = pt.converged;
  fit.objective_trace = pt.trace;
  fit.dropped = s.dropped;
  return fit;
}

void check_inputs(const Matrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("dimension", "row/label count mismatch");
  if (!x.allFinite()) throw Error("invalid_argument", "design matrix contains non-finite values");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw Error("invalid_argument", "labels must be 0 or 1");
  }
  if (!has0 || !has1) throw Error("single_class", "L1 logistic fit needs both classes");
}

double mean_deviance(const Matrix& x, std::span<const int> y, const std::vector<std::size_t>& rows,
                     const LassoFit& fit) {
  double total = 0.0;
  for (std::size_t r : rows) {
    const double eta = fit.intercept + x.row(static_cast<Eigen::Index>(r)).dot(fit.coefficients);
    const double p = std::clamp(sigmoid(eta), 1e-15, 1.0 - 1e-15);
    total += -2.0 * (y[r] ? std::log(p) : std::log(1.0 - p));
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

std::size_t LassoFit::nonzero() const {
  return static_cast<std::size_t>((coefficients.array() != 0.0).count());
}

double lasso_lambda_max(const Matrix& x, std::span<const int> y) {
  check_inputs(x, y);
  const auto s = standardize(x);
  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= static_cast<double>(y.size());
  double best = 0.0;
  for (Eigen::Index j = 0; j < s.z.cols(); ++j) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < s.z.rows(); ++i) g += s.z(i, j) * (y[i] - ybar);
    best = std::max(best, std::abs(g) / static_cast<double>(y.size()));
  }
  return best;
}

std::vector<double> default_lambda_grid(double lambda_max, std::size_t points, double ratio) {
  if (!(lambda_max > 0.0)) throw Error("degenerate", "lambda_max is zero: no feature correlates with the labels");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = lambda_max * std::pow(ratio, t);
  }
  return grid;
}

LassoFit fit_lasso_logistic(const Matrix& x, std::span<const int> y, double lambda, const LassoOptions& options) {
  check_inputs(x, y);
  if (!(lambda >= 0.0)) throw Error("invalid_argument", "lambda must be non-negative");
  const auto s = standardize(x);
  const auto path = fit_path(s.z, y, {lambda}, options);
  return to_original_scale(s, path.front(), lambda, static_cast<std::size_t>(x.cols()));
}

LassoSelection lasso_select(const Matrix& x, std::span<const int> y, const LassoOptions& options) {
  check_inputs(x, y);
  LassoSelection out;
  const auto full = standardize(x);
  for (std::size_t j : full.dropped) {
    out.warnings.push_back("column " + std::to_string(j) + " has zero variance and was excluded from the L1 fit");
  }
  out.grid = options.lambda_grid.empty() ? default_lambda_grid(lasso_lambda_max(x, y)) : options.lambda_grid;
  if (out.grid.empty()) throw Error("invalid_argument", "lambda grid is empty");
  std::sort(out.grid.begin(), out.grid.end(), std::greater<>());

  FoldPlan plan;
  plan.folds.assign(options.folds, {});
  const auto assignment = stratified_assignment(y, options.folds, options.seed);
  for (std::size_t i = 0; i < y.size(); ++i) plan.folds[assignment[i]].push_back(i);
  out.cv_deviance.assign(out.grid.size(), 0.0);
  for (std::size_t f = 0; f < plan.k(); ++f) {
    const auto train = plan.train_indices(f);
    Matrix xt(static_cast<Eigen::Index>(train.size()), x.cols());
    std::vector<int> yt(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(train[i]));
      yt[i] = y[train[i]];
    }
    const auto s = standardize(xt);
    const auto path = fit_path(s.z, yt, out.grid, options);
    for (std::size_t l = 0; l < out.grid.size(); ++l) {
      const auto fit = to_original_scale(s, path[l], out.grid[l], static_cast<std::size_t>(x.cols()));
      out.cv_deviance[l] += mean_deviance(x, y, plan.folds[f], fit) / static_cast<double>(plan.k());
    }
  }

  const auto path = fit_path(full.z, y, out.grid, options);
  std::vector<LassoFit> fits;
  fits.reserve(path.size());
  for (std::size_t l = 0; l < path.size(); ++l) {
    fits.push_back(to_original_scale(full, path[l], out.grid[l], static_cast<std::size_t>(x.cols())));
  }
  // Minimum mean deviance; among lambdas whose fit keeps at least one
  // feature, so a flat deviance curve cannot select the empty model.
  std::size_t best = SIZE_MAX;
  for (std::size_t l = 0; l < fits.size(); ++l) {
    if (fits[l].nonzero() == 0) continue;
    if (best == SIZE_MAX || out.cv_deviance[l] < out.cv_deviance[best]) best = l;
  }
  if (best == SIZE_MAX) throw Error("no_features", "every coefficient is zero at every lambda in the grid");
  out.lambda = out.grid[best];
  out.fit = fits[best];
  for (Eigen::Index j = 0; j < out.fit.coefficients.size(); ++j) {
    if (out.fit.coefficients(j) != 0.0) out.mask.selected.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

}  // namespace pqscreen
