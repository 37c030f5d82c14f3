#include "pqscreen/cohort.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pqscreen {

namespace {

constexpr std::array<double, 5> kBinom4 = {1.0, 4.0, 6.0, 4.0, 1.0};

std::array<double, 5> binomial_pmf(double p) {
  std::array<double, 5> pmf{};
  for (int k = 0; k <= 4; ++k) pmf[k] = kBinom4[k] * std::pow(p, k) * std::pow(1.0 - p, 4 - k);
  return pmf;
}

// Beta-binomial(4, alpha, beta) with mean 4p and intra-class correlation rho.
std::array<double, 5> beta_binomial_pmf(double p, double rho) {
  const double total = 1.0 / rho - 1.0;
  const double alpha = p * total;
  const double beta = (1.0 - p) * total;
  const double log_norm = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  std::array<double, 5> pmf{};
  for (int k = 0; k <= 4; ++k) {
    const double log_b = std::lgamma(k + alpha) + std::lgamma(4 - k + beta) - std::lgamma(4 + alpha + beta);
    pmf[k] = kBinom4[k] * std::exp(log_b - log_norm);
  }
  return pmf;
}

// p_k proportional to C(4,k) exp(a k + b k^2), solved for E[k] = mean and
// E[k^2] = second by damped Newton on the convex dual. b = 0 is the binomial.
std::array<double, 5> tilted_binomial_pmf(double mean, double second) {
  auto evaluate = [](double a, double b, std::array<double, 5>& pmf) {
    std::array<double, 5> logw{};
    double top = -INFINITY;
    for (int k = 0; k <= 4; ++k) {
      logw[k] = std::log(kBinom4[k]) + a * k + b * k * k;
      top = std::max(top, logw[k]);
    }
    double z = 0.0;
    for (int k = 0; k <= 4; ++k) {
      pmf[k] = std::exp(logw[k] - top);
      z += pmf[k];
    }
    for (auto& p : pmf) p /= z;
    return top + std::log(z);
  };
  const double p0 = std::clamp(mean / 4.0, 1e-12, 1.0 - 1e-12);
  double a = std::log(p0 / (1.0 - p0));
  double b = 0.0;
  std::array<double, 5> pmf{};
  for (int iter = 0; iter < 500; ++iter) {
    const double log_z = evaluate(a, b, pmf);
    double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
    for (int k = 0; k <= 4; ++k) {
      e1 += pmf[k] * k;
      e2 += pmf[k] * k * k;
      e3 += pmf[k] * k * k * k;
      e4 += pmf[k] * k * k * k * k;
    }
    const double g1 = e1 - mean;
    const double g2 = e2 - second;
    if (std::abs(g1) < 1e-13 && std::abs(g2) < 1e-13) return pmf;
    Eigen::Matrix2d h;
    h << e2 - e1 * e1, e3 - e1 * e2, e3 - e1 * e2, e4 - e2 * e2;
    h.diagonal().array() += 1e-14;
    const Eigen::Vector2d step = h.ldlt().solve(Eigen::Vector2d(g1, g2));
    const double objective = log_z - a * mean - b * second;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      std::array<double, 5> trial{};
      const double na = a - t * step(0);
      const double nb = b - t * step(1);
      const double trial_obj = evaluate(na, nb, trial) - na * mean - nb * second;
      if (trial_obj <= objective) {
        a = na;
        b = nb;
        break;
      }
    }
  }
  evaluate(a, b, pmf);
  return pmf;
}

}  // namespace

void GroupMoments::validate() const {
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    for (int c = 0; c < 2; ++c) {
      const auto& m = by_feature[j][c];
      if (!std::isfinite(m.mean) || !std::isfinite(m.sd) || m.sd < 0.0) {
        throw Error("infeasible_moments", std::string(feature_names()[j]) + ": invalid moments");
      }
      if (j < kPqItemCount && (m.mean < 0.0 || m.mean > kMaxSeverity)) {
        throw Error("infeasible_moments", std::string(feature_names()[j]) + ": mean outside [0, 4]");
      }
    }
  }
}

std::array<double, 5> severity_pmf(const Moments& target) {
  const double m = target.mean;
  const double v = target.sd * target.sd;
  if (!std::isfinite(m) || !std::isfinite(v) || target.sd < 0.0 || m < 0.0 || m > 4.0) {
    throw Error("infeasible_moments", "mean must lie in [0, 4] and SD must be non-negative");
  }
  constexpr double eps = 1e-12;
  const double v_max = m * (4.0 - m);
  if (v > v_max * (1.0 + 1e-9) + eps) {
    throw Error("infeasible_moments", "SD " + format_double(target.sd) +
                                          " exceeds the largest SD attainable on {0..4} for mean " +
                                          format_double(m));
  }
  std::array<double, 5> pmf{};
  if (v >= v_max - eps) {
    // Extreme overdispersion: all mass on the endpoints.
    pmf[4] = m / 4.0;
    pmf[0] = 1.0 - pmf[4];
    return pmf;
  }
  const double p = m / 4.0;
  const double v_binomial = 4.0 * p * (1.0 - p);
  if (v > v_binomial) {
    const double rho = (v / v_binomial - 1.0) / 3.0;
    return beta_binomial_pmf(p, rho);
  }
  const double lo = std::floor(m);
  const double frac = m - lo;
  const double v_min = frac * (1.0 - frac);
  if (v <= v_min + eps) {
    // Least-dispersed distribution with this mean: adjacent lattice points.
    pmf[static_cast<int>(lo)] = 1.0 - frac;
    if (frac > 0.0) pmf[static_cast<int>(lo) + 1] += frac;
    return pmf;
  }
  if (v == v_binomial) return binomial_pmf(p);
  return tilted_binomial_pmf(m, v + m * m);
}

GroupMoments published_moments() {
  // {HC mean, HC SD, PD mean, PD SD}. The two control entries printed as
  // "0 +/- 0.05" are stored with mean 0.0025 (rounds to 0.00), the only way
  // a nonzero SD of 0.05 is attainable.
  static constexpr double table[kFeatureCount][4] = {
      {0.77, 0.97, 1.03, 1.09},   {0.57, 0.75, 0.95, 0.86},  {0.49, 0.75, 0.8, 0.88},
      {0.33, 0.63, 0.75, 0.86},   {0.13, 0.4, 0.55, 0.73},   {0.11, 0.34, 0.39, 0.67},
      {0.35, 0.6, 0.77, 0.85},    {0.03, 0.21, 0.61, 0.82},  {0.09, 0.39, 0.73, 1.03},
      {0.02, 0.16, 0.22, 0.49},   {0.01, 0.08, 0.48, 0.63},  {0.02, 0.17, 0.59, 0.66},
      {0.0025, 0.05, 0.35, 0.5},  {0.08, 0.34, 1.05, 0.96},  {0.03, 0.23, 0.62, 0.76},
      {0.04, 0.19, 0.41, 0.55},   {0.06, 0.23, 1.17, 0.74},  {0.08, 0.27, 0.59, 0.68},
      {0.07, 0.33, 0.52, 0.61},   {0.0025, 0.05, 0.09, 0.34}, {0.62, 0.49, 0.66, 0.47},
      {66.42, 11.09, 66.61, 9.69}};
  GroupMoments g;
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    g.by_feature[j][0] = {table[j][0], table[j][1]};
    g.by_feature[j][1] = {table[j][2], table[j][3]};
  }
  return g;
}

GroupMoments compute_moments(const Cohort& cohort) {
  GroupMoments g;
  const Matrix x = cohort.feature_matrix();
  const auto y = cohort.labels();
  for (int c = 0; c < 2; ++c) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      if (rows.empty()) continue;
      double sum = 0.0;
      for (auto r : rows) sum += x(r, j);
      const double mean = sum / rows.size();
      double ss = 0.0;
      for (auto r : rows) ss += (x(r, j) - mean) * (x(r, j) - mean);
      const double sd = rows.size() > 1 ? std::sqrt(ss / (rows.size() - 1)) : 0.0;
      g.by_feature[j][c] = {mean, sd};
    }
  }
  return g;
}

namespace {

int draw_from_pmf(Rng& rng, const std::array<double, 5>& pmf) {
  const double u = rng.uniform();
  double cdf = 0.0;
  for (int k = 0; k < 4; ++k) {
    cdf += pmf[k];
    if (u < cdf) return k;
  }
  return 4;
}

// Shifted Poisson visit counts, then nudged one visit at a time so the class
// total equals round(mean * subjects) exactly.
std::vector<int> draw_visit_counts(Rng& rng, std::size_t subjects, double mean_visits) {
  std::vector<int> counts(subjects);
  for (auto& c : counts) c = 1 + rng.poisson(mean_visits - 1.0);
  const long target = std::lround(mean_visits * static_cast<double>(subjects));
  long total = std::accumulate(counts.begin(), counts.end(), 0L);
  while (total != target) {
    auto& c = counts[rng.below(subjects)];
    if (total < target) {
      ++c;
      ++total;
    } else if (c > 1) {
      --c;
      --total;
    }
  }
  return counts;
}

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (sd == 0.0) return std::clamp(mean, lo, hi);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double v = mean + sd * rng.normal();
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mean, lo, hi);
}

}  // namespace

Cohort synthesize_cohort(const GroupMoments& moments, const SynthesisOptions& options) {
  if (options.n_normal_subjects == 0 || options.n_pd_subjects == 0) {
    throw Error("invalid_argument", "subject counts must be positive");
  }
  if (!(options.visits_normal >= 1.0) || !(options.visits_pd >= 1.0) || options.visits_normal > 500 ||
      options.visits_pd > 500) {
    throw Error("invalid_argument", "mean visit counts must lie in [1, 500]");
  }
  moments.validate();

  std::array<std::array<std::array<double, 5>, kPqItemCount>, 2> pmfs{};
  for (int c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < kPqItemCount; ++j) {
      try {
        pmfs[c][j] = severity_pmf(moments.by_feature[j][c]);
      } catch (const Error& e) {
        throw Error(e.code(), std::string(feature_names()[j]) + " (" +
                                  std::string(label_name(static_cast<Label>(c))) + "): " + e.what());
      }
    }
    const double g = moments.by_feature[kGenderIndex][c].mean;
    if (g < 0.0 || g > 1.0) {
      throw Error("infeasible_moments", "GENDER: mean must lie in [0, 1]");
    }
  }

  Rng rng(options.seed);
  std::vector<Observation> observations;
  const std::array<std::size_t, 2> subjects = {options.n_normal_subjects, options.n_pd_subjects};
  const std::array<double, 2> visit_means = {options.visits_normal, options.visits_pd};
  std::size_t subject_number = 0;
  for (int c = 0; c < 2; ++c) {
    const auto counts = draw_visit_counts(rng, subjects[c], visit_means[c]);
    const auto& age = moments.by_feature[kAgeIndex][c];
    const double gender_p = moments.by_feature[kGenderIndex][c].mean;
    for (std::size_t s = 0; s < subjects[c]; ++s, ++subject_number) {
      char id[32];
      std::snprintf(id, sizeof(id), "S%05zu", subject_number + 1);
      for (int v = 0; v < counts[s]; ++v) {
        Observation o;
        o.subject_id = id;
        o.visit_index = v;
        o.label = static_cast<Label>(c);
        for (std::size_t j = 0; j < kPqItemCount; ++j) o.features.pq_items[j] = draw_from_pmf(rng, pmfs[c][j]);
        o.features.gender = rng.uniform() < gender_p ? 1 : 0;
        o.features.age = truncated_normal(rng, age.mean, age.sd, options.age_min, options.age_max);
        observations.push_back(std::move(o));
      }
    }
  }
  return Cohort(std::move(observations));
}

}  // namespace pqscreen
