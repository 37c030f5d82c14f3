#include "pqscreen/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pqscreen::stats {

double two_sided_normal_p(double z) {
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  if (p < 1e-300) return 0.0;
  return std::min(1.0, p);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error("invalid_argument", "mean of empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sd(std::span<const double> values) {
  if (values.size() < 2) throw Error("invalid_argument", "SD needs at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 share the average of ranks i+1..j
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
    i = j;
  }
  return ranks;
}

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double d : v) {
    if (!std::isfinite(d)) throw Error("invalid_argument", std::string(what) + " contains non-finite values");
  }
}

}  // namespace

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, RankSumMode mode,
                             bool continuity) {
  if (x.empty() || y.empty()) throw Error("invalid_argument", "rank-sum test needs two non-empty samples");
  check_finite(x, "rank-sum sample");
  check_finite(y, "rank-sum sample");
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  const std::size_t n = n1 + n2;
  if (mode == RankSumMode::Exact && n > kExactRankSumLimit) {
    throw Error("invalid_argument", "exact rank-sum mode supports at most " +
                                        std::to_string(kExactRankSumLimit) + " observations");
  }
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const double w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(n1), 0.0);
  const double expected = 0.5 * static_cast<double>(n1) * static_cast<double>(n + 1);

  // tie correction: sum over tie groups of t^3 - t
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double nd = static_cast<double>(n);
  double variance = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 * (nd + 1.0);
  if (n > 1) variance -= static_cast<double>(n1) * static_cast<double>(n2) / 12.0 * ties / (nd * (nd - 1.0));
  const double z_raw = variance > 0.0 ? (w - expected) / std::sqrt(variance) : 0.0;

  if (mode == RankSumMode::Exact) {
    // Doubled mid-ranks are integers, so the null distribution of the rank
    // sum can be counted exactly: counts[size][sum].
    std::vector<int> doubled(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<std::vector<double>> counts(n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    counts[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t top = std::min(i + 1, n1);
      for (std::size_t size = top; size >= 1; --size) {
        auto& dst = counts[size];
        const auto& src = counts[size - 1];
        for (int s = total; s >= doubled[i]; --s) dst[s] += src[s - doubled[i]];
      }
    }
    const long observed = std::lround(2.0 * w);
    const long centre2 = static_cast<long>(n1) * static_cast<long>(n + 1);  // 2 * expected
    const long observed_dev = std::labs(observed - centre2);
    double extreme = 0.0;
    double all = 0.0;
    for (int s = 0; s <= total; ++s) {
      const double c = counts[n1][s];
      if (c == 0.0) continue;
      all += c;
      if (std::labs(static_cast<long>(s) - centre2) >= observed_dev) extreme += c;
    }
    return {z_raw, std::min(1.0, extreme / all), Method::WilcoxonExact};
  }

  if (variance <= 0.0) return {0.0, 1.0, Method::WilcoxonApprox};
  double d = w - expected;
  if (continuity) d = std::copysign(std::max(std::abs(d) - 0.5, 0.0), d);
  const double z = d / std::sqrt(variance);
  return {z, two_sided_normal_p(z), Method::WilcoxonApprox};
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("invalid_argument", "spearman: length mismatch");
  if (x.size() < 3) throw Error("invalid_argument", "spearman: need at least 3 pairs");
  check_finite(x, "spearman input");
  check_finite(y, "spearman input");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("degenerate", "spearman: constant input, correlation undefined");
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  double p = 0.0;
  if (std::abs(rho) < 1.0) {
    const double df = n - 2.0;
    const double t = rho * std::sqrt(df / (1.0 - rho * rho));
    boost::math::students_t dist(df);
    p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    if (p < 1e-300) p = 0.0;
  }
  return {rho, std::min(1.0, p), Method::Spearman};
}

AnovaResult anova_tukey(const std::vector<std::vector<double>>& groups, double alpha) {
  if (groups.size() < 2) throw Error("invalid_argument", "ANOVA needs at least two groups");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("invalid_argument", "alpha must lie in (0, 1)");
  const std::size_t k = groups.size();
  AnovaResult out;
  std::size_t total_n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error("invalid_argument", "every ANOVA group needs at least two values");
    check_finite(g, "ANOVA group");
    out.means.push_back(mean(g));
    total_n += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= static_cast<double>(total_n);
  double ss_between = 0.0, ss_within = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ss_between += static_cast<double>(groups[i].size()) * (out.means[i] - grand) * (out.means[i] - grand);
    for (double v : groups[i]) ss_within += (v - out.means[i]) * (v - out.means[i]);
  }
  const double df_between = static_cast<double>(k - 1);
  const double df_within = static_cast<double>(total_n - k);
  out.df_error = df_within;
  out.mse = ss_within / df_within;
  const bool equal_means = std::all_of(out.means.begin(), out.means.end(),
                                       [&](double m) { return m == out.means.front(); });
  if (ss_within == 0.0) {
    if (equal_means) throw Error("degenerate", "ANOVA: all groups constant and equal");
    out.anova = {INFINITY, 0.0, Method::Anova};
  } else {
    const double f = (ss_between / df_between) / out.mse;
    boost::math::fisher_f dist(df_between, df_within);
    double p = boost::math::cdf(boost::math::complement(dist, f));
    if (p < 1e-300) p = 0.0;
    out.anova = {f, std::clamp(p, 0.0, 1.0), Method::Anova};
  }

  out.q_critical = studentized_range_quantile(1.0 - alpha, static_cast<double>(k), df_within);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairwiseComparison pc;
      pc.group_a = a;
      pc.group_b = b;
      pc.mean_diff = out.means[a] - out.means[b];
      const double se = std::sqrt(0.5 * out.mse *
                                  (1.0 / static_cast<double>(groups[a].size()) +
                                   1.0 / static_cast<double>(groups[b].size())));
      const double half = out.q_critical * se;
      pc.ci_low = pc.mean_diff - half;
      pc.ci_high = pc.mean_diff + half;
      pc.significant = pc.ci_low > 0.0 || pc.ci_high < 0.0;
      out.pairs.push_back(pc);
    }
  }
  return out;
}

std::pair<double, double> ci95(std::span<const double> values) {
  if (values.size() < 2) throw Error("invalid_argument", "ci95 needs at least two values");
  check_finite(values, "ci95 input");
  const double m = mean(values);
  const double s = sd(values);
  boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(dist, 0.975);
  const double half = t * s / std::sqrt(static_cast<double>(values.size()));
  return {m - half, m + half};
}

}  // namespace pqscreen::stats
