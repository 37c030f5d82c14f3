#include <doctest.h>

#include "pqscreen/stats.hpp"
#include "support.hpp"

#include <cmath>

using namespace pqscreen;
using namespace pqscreen::stats;

TEST_CASE("exact rank-sum on fully separated samples") {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  const auto r = wilcoxon_rank_sum(x, y, RankSumMode::Exact);
  CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(r.statistic < 0);
  CHECK(r.method == Method::WilcoxonExact);
}

TEST_CASE("identical tied samples give z 0 and p 1") {
  const std::vector<double> x{1, 2, 3};
  for (auto mode : {RankSumMode::Exact, RankSumMode::Approx}) {
    const auto r = wilcoxon_rank_sum(x, x, mode);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
  }
  const std::vector<double> same{2, 2, 2};
  CHECK(wilcoxon_rank_sum(same, same).p_value == 1.0);
}

TEST_CASE("approximate z without continuity correction") {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  // W = 6, mean 10.5, variance 5.25
  const double z = (6.0 - 10.5) / std::sqrt(5.25);
  const auto r = wilcoxon_rank_sum(x, y, RankSumMode::Approx, false);
  CHECK(r.statistic == doctest::Approx(z).epsilon(1e-12));
  CHECK(r.statistic == doctest::Approx(-1.9640).epsilon(1e-4));
  const auto corrected = wilcoxon_rank_sum(x, y, RankSumMode::Approx, true);
  CHECK(corrected.statistic == doctest::Approx((6.0 - 10.5 + 0.5) / std::sqrt(5.25)));
  CHECK(corrected.p_value > r.p_value);
}

TEST_CASE("exact mode matches subset enumeration") {
  pqtest::Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = pqtest::uniform_int(rng, 2, 10);
    const int m = pqtest::uniform_int(rng, 1, n - 1);
    const int range = pqtest::uniform_int(rng, 1, 6);
    const auto x = pqtest::integer_sample(rng, m, 0, range);
    const auto y = pqtest::integer_sample(rng, n - m, 0, range);
    CHECK(wilcoxon_rank_sum(x, y, RankSumMode::Exact).p_value ==
          doctest::Approx(pqtest::wilcoxon_enumeration_p(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("z is antisymmetric under swapping samples") {
  pqtest::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = pqtest::integer_sample(rng, 5 + rng.below(30), 0, 4);
    const auto y = pqtest::integer_sample(rng, 5 + rng.below(30), 0, 4);
    const auto a = wilcoxon_rank_sum(x, y);
    const auto b = wilcoxon_rank_sum(y, x);
    CHECK(a.statistic == doctest::Approx(-b.statistic).epsilon(1e-12));
    CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
  }
}

TEST_CASE("rank-sum input errors") {
  const std::vector<double> empty, one{1.0};
  CHECK_THROWS_AS(wilcoxon_rank_sum(empty, one), Error);
  const std::vector<double> big(20, 1.0);
  CHECK_THROWS_AS(wilcoxon_rank_sum(big, big, RankSumMode::Exact), Error);
  const std::vector<double> bad{1.0, NAN};
  CHECK_THROWS_AS(wilcoxon_rank_sum(bad, one), Error);
}

TEST_CASE("tiny p-values report as zero") {
  std::vector<double> x(3000, 0.0), y(3000, 4.0);
  const auto r = wilcoxon_rank_sum(x, y);
  CHECK(r.p_value == 0.0);
}

TEST_CASE("midranks average ties") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(midranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman reference values") {
  const std::vector<double> x{1, 2, 3};
  CHECK(spearman(x, std::vector<double>{10, 20, 30}).statistic == doctest::Approx(1.0));
  CHECK(spearman(x, std::vector<double>{30, 20, 10}).statistic == doctest::Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}).statistic ==
        doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 1, 1}), Error);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), Error);
}

TEST_CASE("spearman is invariant under increasing transforms") {
  pqtest::Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + rng.normal();
    }
    std::vector<double> tx(x), ty(y);
    for (auto& v : tx) v = std::exp(v);
    for (auto& v : ty) v = v * v * v + 2.0;
    CHECK(spearman(x, y).statistic == doctest::Approx(spearman(tx, ty).statistic).epsilon(1e-12));
  }
}

TEST_CASE("ci95 reference cases") {
  const auto flat = ci95(std::vector<double>{5, 5, 5, 5});
  CHECK(flat.first == 5.0);
  CHECK(flat.second == 5.0);
  const auto two = ci95(std::vector<double>{0, 10});
  CHECK((two.first + two.second) / 2 == doctest::Approx(5.0));
  CHECK_THROWS_AS(ci95(std::vector<double>{1}), Error);

  pqtest::Rng rng(9);
  std::vector<double> draws(10000);
  for (auto& d : draws) d = rng.normal();
  const auto big = ci95(draws);
  const double width = big.second - big.first;
  CHECK(width == doctest::Approx(2 * 1.96 / 100).epsilon(0.05));
}

TEST_CASE("studentized range reference points") {
  // q(0.95; 2, inf) = sqrt(2) * 1.959964
  CHECK(studentized_range_quantile(0.95, 2, INFINITY) == doctest::Approx(std::sqrt(2.0) * 1.959964).epsilon(0.01));
  // Published table values.
  CHECK(studentized_range_quantile(0.95, 3, 10) == doctest::Approx(3.877).epsilon(1e-3));
  CHECK(studentized_range_quantile(0.95, 5, 20) == doctest::Approx(4.232).epsilon(1e-3));
  CHECK(studentized_range_quantile(0.99, 4, 30) == doctest::Approx(4.799).epsilon(1e-3));
  const double q = studentized_range_quantile(0.95, 4, 40);
  CHECK(studentized_range_cdf(q, 4, 40) == doctest::Approx(0.95).epsilon(1e-6));
}

TEST_CASE("separated groups are significant") {
  std::vector<double> a{0.001, -0.002, 0.0, 0.001}, b{10.0, 10.001, 9.999, 10.002};
  const auto r = anova_tukey({a, b});
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].significant);
  CHECK(r.anova.p_value < 1e-6);
}

TEST_CASE("identical groups are never significant") {
  std::vector<double> g{1, 2, 3, 4, 5};
  const auto r = anova_tukey({g, g, g, g});
  CHECK(r.pairs.size() == 6);
  for (const auto& p : r.pairs) {
    CHECK(p.mean_diff == 0.0);
    CHECK_FALSE(p.significant);
  }
  CHECK(r.anova.statistic == 0.0);
}

TEST_CASE("anova errors") {
  CHECK_THROWS_AS(anova_tukey({{1, 2}}), Error);
  CHECK_THROWS_AS(anova_tukey({{1, 2}, {3}}), Error);
  CHECK_THROWS_AS(anova_tukey({{1, 1}, {1, 1}}), Error);
}

TEST_CASE("tukey flags agree with interval zero exclusion") {
  pqtest::Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::vector<double>> groups(3 + trial % 3);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      groups[g].resize(4 + rng.below(10));
      for (auto& v : groups[g]) v = rng.normal() + 0.5 * static_cast<double>(g % 2);
    }
    const auto r = anova_tukey(groups);
    for (const auto& p : r.pairs) {
      CHECK(p.ci_low <= p.mean_diff);
      CHECK(p.mean_diff <= p.ci_high);
      CHECK(p.significant == (p.ci_low > 0 || p.ci_high < 0));
    }
  }
}

TEST_CASE("null two-group comparison rarely significant") {
  pqtest::Rng rng(404);
  int significant = 0;
  const int runs = 400;
  for (int trial = 0; trial < runs; ++trial) {
    std::vector<double> a(20), b(20);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
    if (anova_tukey({a, b}).pairs[0].significant) ++significant;
  }
  const double rate = static_cast<double>(significant) / runs;
  CHECK(rate > 0.02);
  CHECK(rate < 0.09);
}
