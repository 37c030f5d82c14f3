#pragma once

#include "pqscreen/common.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pqscreen::stats {

enum class Method { WilcoxonExact, WilcoxonApprox, Spearman, Anova };

struct TestResult {
  double statistic = 0.0;  // z, rho or F depending on method
  double p_value = 1.0;
  Method method = Method::WilcoxonApprox;
};

enum class RankSumMode { Exact, Approx };

inline constexpr std::size_t kExactRankSumLimit = 25;

/// Two-sided rank-sum test of equal location. Approx mode returns the normal
/// z of the first sample's rank sum (tie-corrected variance, 0.5 continuity
/// correction unless disabled); exact mode enumerates every assignment of the
/// pooled mid-ranks. z < 0 when the first sample ranks low.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                             RankSumMode mode = RankSumMode::Approx, bool continuity = true);

/// Mid-ranks (1-based, ties averaged).
std::vector<double> midranks(std::span<const double> values);

/// Rank correlation with a t-approximation p-value. Throws on constant input.
TestResult spearman(std::span<const double> x, std::span<const double> y);

struct PairwiseComparison {
  std::size_t group_a = 0;
  std::size_t group_b = 0;
  double mean_diff = 0.0;  // mean(a) - mean(b)
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;
};

struct AnovaResult {
  TestResult anova;
  std::vector<PairwiseComparison> pairs;
  std::vector<double> means;
  double mse = 0.0;
  double df_error = 0.0;
  double q_critical = 0.0;
};

/// One-way ANOVA plus Tukey-Kramer simultaneous intervals at level alpha.
AnovaResult anova_tukey(const std::vector<std::vector<double>>& groups, double alpha = 0.05);

/// mean +/- t(0.975, n-1) * SD / sqrt(n).
std::pair<double, double> ci95(std::span<const double> values);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1).
double sd(std::span<const double> values);

/// Studentized range distribution for k means and df degrees of freedom
/// (df = infinity allowed). Computed by numerical integration.
double studentized_range_cdf(double q, double k, double df);
double studentized_range_quantile(double p, double k, double df);

/// Two-sided normal tail probability 2 * Phi(-|z|); values below 1e-300
/// are reported as 0.
double two_sided_normal_p(double z);

}  // namespace pqscreen::stats
