#pragma once

// Shared helpers for the test binaries: seeded generators and brute-force
// oracles written independently of the library code they check.

#include "pqscreen/cohort.hpp"
#include "pqscreen/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace pqtest {

using pqscreen::Matrix;
using pqscreen::Rng;
using pqscreen::Vector;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

inline std::vector<double> integer_sample(Rng& rng, std::size_t n, int lo, int hi) {
  std::vector<double> out(n);
  for (auto& v : out) v = uniform_int(rng, lo, hi);
  return out;
}

/// Two-sided exact rank-sum p-value by visiting every subset of size |x| of
/// the pooled sample. Mid-ranks are recomputed here by an O(n^2) count.
inline double wilcoxon_enumeration_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size();
  const std::size_t m = x.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) ++less;
      if (pooled[j] == pooled[i]) ++equal;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double observed = 0;
  for (std::size_t i = 0; i < m; ++i) observed += rank[i];
  const double centre = m * (n + 1.0) / 2.0;
  const double dev = std::abs(observed - centre);
  std::size_t extreme = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += rank[i];
    }
    ++total;
    if (std::abs(s - centre) >= dev - 1e-9) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

/// AUC by counting every positive/negative pair.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double good = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1;
      if (scores[i] > scores[j]) good += 1;
      else if (scores[i] == scores[j]) good += 0.5;
    }
  }
  return good / pairs;
}

/// Labels from a logistic model with standard-normal features.
struct LogisticSample {
  Matrix x;
  std::vector<int> y;
};

inline LogisticSample logistic_sample(std::size_t n, const std::vector<double>& beta, double intercept,
                                      std::uint64_t seed) {
  Rng rng(seed);
  LogisticSample s{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(beta.size())),
                   std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double f = intercept;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      const double v = rng.normal();
      s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      f += beta[j] * v;
    }
    s.y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-f)) ? 1 : 0;
  }
  return s;
}

/// Two Gaussian blobs, class 1 shifted by `shift` on every coordinate.
inline LogisticSample blobs(std::size_t n, std::size_t p, double shift, std::uint64_t seed) {
  Rng rng(seed);
  LogisticSample s{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p)), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    s.y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < p; ++j) {
      s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal() + shift * s.y[i];
    }
  }
  return s;
}

/// A cohort whose features carry no information about the label: every
/// subject gets a random label and each visit fresh uniform severities.
inline pqscreen::Cohort noise_cohort(std::size_t subjects, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<pqscreen::Observation> rows;
  for (std::size_t s = 0; s < subjects; ++s) {
    const auto label = rng.uniform() < 0.5 ? pqscreen::Label::Normal : pqscreen::Label::EarlyPD;
    const int visits = 1 + static_cast<int>(rng.below(6));
    for (int v = 0; v < visits; ++v) {
      pqscreen::Observation o;
      o.subject_id = "S" + std::to_string(s);
      o.visit_index = v;
      o.label = label;
      for (auto& item : o.features.pq_items) item = uniform_int(rng, 0, 4);
      o.features.age = 40.0 + 40.0 * rng.uniform();
      o.features.gender = static_cast<int>(rng.below(2));
      rows.push_back(std::move(o));
    }
  }
  return pqscreen::Cohort(std::move(rows));
}

/// Small hand-built cohort: `per_class` subjects per class, `visits` visits
/// each. PD subjects score higher on tremor and handwriting.
inline pqscreen::Cohort tiny_cohort(std::size_t per_class, int visits, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<pqscreen::Observation> rows;
  for (std::size_t s = 0; s < 2 * per_class; ++s) {
    const bool pd = s >= per_class;
    for (int v = 0; v < visits; ++v) {
      pqscreen::Observation o;
      o.subject_id = (pd ? "P" : "N") + std::to_string(s);
      o.visit_index = v;
      o.label = pd ? pqscreen::Label::EarlyPD : pqscreen::Label::Normal;
      for (auto& item : o.features.pq_items) item = uniform_int(rng, 0, 1);
      o.features.pq_items[16] = pd ? uniform_int(rng, 1, 4) : uniform_int(rng, 0, 1);
      o.features.pq_items[13] = pd ? uniform_int(rng, 1, 3) : 0;
      o.features.age = 50.0 + 20.0 * rng.uniform();
      o.features.gender = static_cast<int>(rng.below(2));
      rows.push_back(std::move(o));
    }
  }
  return pqscreen::Cohort(std::move(rows));
}

}  // namespace pqtest
