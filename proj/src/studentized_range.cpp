#include "pqscreen/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

namespace pqscreen::stats {

namespace {

using boost::math::quadrature::gauss_kronrod;

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P(range of k iid standard normals <= w)
double normal_range_cdf(double w, double k) {
  if (w <= 0.0) return 0.0;
  auto integrand = [&](double z) {
    const double inner = Phi(z) - Phi(z - w);
    return inner > 0.0 ? phi(z) * std::pow(inner, k - 1.0) : 0.0;
  };
  const double lo = -8.5;
  const double hi = 8.5 + w;
  const double v = k * gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 12, 1e-12);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

double studentized_range_cdf(double q, double k, double df) {
  if (!(k >= 2.0)) throw Error("invalid_argument", "studentized range needs k >= 2");
  if (!(df > 0.0)) throw Error("invalid_argument", "studentized range needs df > 0");
  if (q <= 0.0) return 0.0;
  if (!std::isfinite(df) || df > 1e7) return normal_range_cdf(q, k);

  // s = sqrt(chi2_df / df) has density proportional to s^(df-1) exp(-df s^2 / 2).
  const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(log_density) * normal_range_cdf(q * s, k);
  };
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - 20.0 * spread);
  const double hi = 1.0 + 20.0 * spread + (df < 4.0 ? 20.0 : 0.0);
  const double v = gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 12, 1e-10);
  return std::clamp(v, 0.0, 1.0);
}

double studentized_range_quantile(double p, double k, double df) {
  if (!(p > 0.0 && p < 1.0)) throw Error("invalid_argument", "quantile probability must lie in (0, 1)");
  auto f = [&](double q) { return studentized_range_cdf(q, k, df) - p; };
  double hi = 10.0;
  while (f(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e6) throw Error("convergence", "studentized range quantile did not bracket");
  }
  double lo = 0.0;
  boost::math::tools::eps_tolerance<double> tol(40);
  std::uintmax_t iterations = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, -p, f(hi), tol, iterations);
  return 0.5 * (a + b);
}

}  // namespace pqscreen::stats
