#include "pqscreen/select.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace pqscreen {

FeatureMask FeatureMask::all(std::size_t columns) {
  FeatureMask m;
  m.selected.resize(columns);
  std::iota(m.selected.begin(), m.selected.end(), 0);
  return m;
}

void FeatureMask::validate(std::size_t columns) const {
  if (selected.empty()) throw Error("no_features", "feature mask is empty");
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] >= columns) throw Error("dimension", "feature mask index out of range");
    if (i > 0 && selected[i] <= selected[i - 1]) throw Error("invalid_argument", "feature mask must be sorted and unique");
  }
}

Matrix FeatureMask::apply(const Matrix& x) const {
  Matrix out(x.rows(), static_cast<Eigen::Index>(selected.size()));
  for (std::size_t j = 0; j < selected.size(); ++j) {
    if (static_cast<Eigen::Index>(selected[j]) >= x.cols()) throw Error("dimension", "feature mask index out of range");
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(selected[j]));
  }
  return out;
}

double PcaTransform::retained_fraction() const {
  return explained_fraction.head(components.cols()).sum();
}

Matrix PcaTransform::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error("dimension", "PCA input has " + std::to_string(x.cols()) +
                                                            " columns, expected " + std::to_string(mean.size()));
  return (x.rowwise() - mean.transpose()) * components;
}

Vector PcaTransform::apply(const Vector& x) const {
  if (x.size() != mean.size()) throw Error("dimension", "PCA input dimension mismatch");
  return components.transpose() * (x - mean);
}

Matrix apply_selector(const Selector& selector, const Matrix& x) {
  return std::visit([&](const auto& s) { return s.apply(x); }, selector);
}

std::size_t input_dimension(const Selector& selector) {
  if (const auto* pca = std::get_if<PcaTransform>(&selector)) return static_cast<std::size_t>(pca->mean.size());
  const auto& mask = std::get<FeatureMask>(selector);
  return mask.selected.empty() ? 0 : mask.selected.back() + 1;
}

std::vector<stats::TestResult> wilcoxon_screen(const Matrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("dimension", "row/label count mismatch");
  std::vector<std::size_t> rows0, rows1;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? rows1 : rows0).push_back(i);
  if (rows0.empty() || rows1.empty()) throw Error("single_class", "rank-sum screening needs both classes");
  std::vector<stats::TestResult> out;
  std::vector<double> a(rows0.size()), b(rows1.size());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < rows0.size(); ++i) a[i] = x(static_cast<Eigen::Index>(rows0[i]), j);
    for (std::size_t i = 0; i < rows1.size(); ++i) b[i] = x(static_cast<Eigen::Index>(rows1[i]), j);
    out.push_back(stats::wilcoxon_rank_sum(a, b, stats::RankSumMode::Approx));
  }
  return out;
}

FeatureMask wilcoxon_filter(const Matrix& x, std::span<const int> y, double alpha) {
  if (!(alpha > 0.0)) throw Error("invalid_argument", "alpha must be positive");
  const auto tests = wilcoxon_screen(x, y);
  FeatureMask mask;
  for (std::size_t j = 0; j < tests.size(); ++j) {
    if (alpha >= 1.0 || tests[j].p_value < alpha) mask.selected.push_back(j);
  }
  if (mask.selected.empty()) throw Error("no_features", "no feature discriminates the classes at the requested level");
  return mask;
}

PcaTransform pca_fit(const Matrix& x, double variance_threshold) {
  if (x.rows() < 2) throw Error("invalid_argument", "PCA needs at least two observations");
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw Error("invalid_argument", "variance threshold must lie in (0, 1]");
  }
  if (!x.allFinite()) throw Error("invalid_argument", "PCA input contains non-finite values");
  PcaTransform t;
  t.mean = x.colwise().mean();
  const Matrix centred = x.rowwise() - t.mean.transpose();
  const Matrix cov = (centred.transpose() * centred) / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("convergence", "covariance eigendecomposition failed");
  const Eigen::Index p = x.cols();
  // Eigen returns ascending eigenvalues.
  t.eigenvalues = solver.eigenvalues().reverse();
  const Matrix vectors = solver.eigenvectors().rowwise().reverse();
  const double trace = t.eigenvalues.cwiseMax(0.0).sum();
  if (trace <= 0.0) throw Error("degenerate", "PCA input has zero total variance");
  t.explained_fraction = t.eigenvalues.cwiseMax(0.0) / trace;
  Eigen::Index keep = 0;
  double cumulative = 0.0;
  while (keep < p) {
    cumulative += t.explained_fraction(keep);
    ++keep;
    if (cumulative >= variance_threshold - 1e-12) break;
  }
  if (cumulative < variance_threshold - 1e-12) throw Error("degenerate", "variance threshold unreachable");
  t.components = vectors.leftCols(keep);
  // Sign convention: largest-magnitude loading positive, for stable output.
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::Index arg = 0;
    t.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (t.components(arg, c) < 0.0) t.components.col(c) *= -1.0;
  }
  return t;
}

}  // namespace pqscreen
