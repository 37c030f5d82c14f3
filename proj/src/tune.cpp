#include "pqscreen/tune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pqscreen {

void SearchSpace::validate() const {
  for (const auto& d : dimensions) {
    if (d.name.empty()) throw Error("invalid_argument", "search dimension without a name");
    if (!(d.low < d.high) || !std::isfinite(d.low) || !std::isfinite(d.high)) {
      throw Error("invalid_argument", "dimension " + d.name + " needs finite low < high");
    }
    if (d.log_scale && !(d.low > 0.0)) throw Error("invalid_argument", "log dimension " + d.name + " needs low > 0");
    if (d.integer && std::ceil(d.low) > std::floor(d.high)) {
      throw Error("invalid_argument", "integer dimension " + d.name + " holds no integer");
    }
  }
}

double SearchSpace::from_unit(std::size_t d, double u) const {
  const auto& dim = dimensions[d];
  u = std::clamp(u, 0.0, 1.0);
  double v = dim.log_scale ? std::exp(std::log(dim.low) + u * (std::log(dim.high) - std::log(dim.low)))
                           : dim.low + u * (dim.high - dim.low);
  if (dim.integer) v = std::clamp(std::round(v), std::ceil(dim.low), std::floor(dim.high));
  return std::clamp(v, dim.low, dim.high);
}

double SearchSpace::to_unit(std::size_t d, double value) const {
  const auto& dim = dimensions[d];
  const double u = dim.log_scale ? (std::log(value) - std::log(dim.low)) / (std::log(dim.high) - std::log(dim.low))
                                 : (value - dim.low) / (dim.high - dim.low);
  return std::clamp(u, 0.0, 1.0);
}

SearchSpace default_search_space(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return {};
    case ModelKind::Forest: return {{{"n_trees", 50, 500, false, true}, {"min_leaf", 1, 20, false, true}}};
    case ModelKind::Boost: return {{{"n_rounds", 50, 500, false, true}, {"max_depth", 1, 4, false, true}}};
    case ModelKind::Svm: return {{{"c", 1e-2, 1e3, true, false}, {"gamma", 1e-4, 1e1, true, false}}};
  }
  return {};
}

std::size_t initial_design_size(std::size_t dimensions, std::size_t budget) {
  return std::min(budget, std::max<std::size_t>(5, dimensions + 1));
}

double halton(std::size_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

namespace {

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

TuneResult bayes_optimize(const TuneObjective& objective, const SearchSpace& space, std::size_t budget,
                          std::uint64_t seed) {
  space.validate();
  const std::size_t d = space.size();
  if (d == 0) throw Error("invalid_argument", "search space has no dimensions");
  if (d > std::size(kPrimes)) throw Error("invalid_argument", "search space has too many dimensions");
  if (budget < d + 2) {
    throw Error("invalid_argument", "tuning budget " + std::to_string(budget) + " is below dimensions + 2 = " +
                                        std::to_string(d + 2));
  }
  Rng rng(seed);
  TuneResult result;
  std::vector<Vector> unit_points;  // evaluated points (after rounding), unit coordinates
  std::vector<double> raw_values;  // objective values, non-finite kept as NaN

  auto evaluate = [&](const Vector& u) {
    Hyperparameters point;
    Vector snapped(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const double v = space.from_unit(k, u(static_cast<Eigen::Index>(k)));
      point[space.dimensions[k].name] = v;
      snapped(static_cast<Eigen::Index>(k)) = space.to_unit(k, v);
    }
    double value = objective(point);
    const bool finite = std::isfinite(value);
    result.history.push_back({point, finite ? value : kTunePenalty});
    unit_points.push_back(snapped);
    raw_values.push_back(finite ? value : std::numeric_limits<double>::quiet_NaN());
  };

  // Initial design: Halton points under a seeded random rotation.
  std::vector<double> shift(d);
  for (auto& s : shift) s = rng.uniform();
  const std::size_t n0 = initial_design_size(d, budget);
  for (std::size_t i = 0; i < n0; ++i) {
    Vector u(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const double h = halton(i + 1, kPrimes[k]) + shift[k];
      u(static_cast<Eigen::Index>(k)) = h - std::floor(h);
    }
    evaluate(u);
  }

  while (result.history.size() < budget) {
    // The surrogate sees non-finite results as the worst finite value seen.
    double worst = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (double v : raw_values) {
      if (std::isfinite(v)) {
        worst = std::max(worst, v);
        best = std::min(best, v);
      }
    }
    Vector u_next(static_cast<Eigen::Index>(d));
    if (!std::isfinite(best)) {
      for (std::size_t k = 0; k < d; ++k) u_next(static_cast<Eigen::Index>(k)) = rng.uniform();
      evaluate(u_next);
      continue;
    }
    const Eigen::Index m = static_cast<Eigen::Index>(unit_points.size());
    Matrix x(m, static_cast<Eigen::Index>(d));
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      x.row(i) = unit_points[static_cast<std::size_t>(i)].transpose();
      const double v = raw_values[static_cast<std::size_t>(i)];
      y(i) = std::isfinite(v) ? v : worst;
    }
    GaussianProcess gp;
    gp.fit(x, y, rng);
    auto acquisition = [&](const Vector& u) {
      const auto [mu, sd] = gp.predict(u);
      return expected_improvement(mu, sd, best);
    };

    // Random multistart, then pattern-search refinement of the best few.
    struct Candidate {
      Vector u;
      double ei;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(1000);
    for (int c = 0; c < 1000; ++c) {
      Vector u(static_cast<Eigen::Index>(d));
      for (std::size_t k = 0; k < d; ++k) u(static_cast<Eigen::Index>(k)) = rng.uniform();
      const double ei = acquisition(u);
      candidates.push_back({std::move(u), ei});
    }
    std::partial_sort(candidates.begin(), candidates.begin() + 5, candidates.end(),
                      [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });
    Candidate winner = candidates.front();
    for (int s = 0; s < 5; ++s) {
      Candidate c = candidates[static_cast<std::size_t>(s)];
      for (double step = 0.05; step > 1e-4; step *= 0.5) {
        bool moved = true;
        while (moved) {
          moved = false;
          for (std::size_t k = 0; k < d; ++k) {
            for (double dir : {-1.0, 1.0}) {
              Vector trial = c.u;
              auto& coord = trial(static_cast<Eigen::Index>(k));
              coord = std::clamp(coord + dir * step, 0.0, 1.0);
              const double ei = acquisition(trial);
              if (ei > c.ei) {
                c = {std::move(trial), ei};
                moved = true;
              }
            }
          }
        }
      }
      if (c.ei > winner.ei) winner = std::move(c);
    }
    evaluate(winner.u);
  }

  bool any_finite = false;
  for (double v : raw_values) any_finite = any_finite || std::isfinite(v);
  if (!any_finite) throw Error("degenerate", "every objective evaluation was non-finite");
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    if (result.history[i].objective < result.history[best_index].objective) best_index = i;
  }
  result.best_point = result.history[best_index].point;
  result.best_objective = result.history[best_index].objective;
  return result;
}

}  // namespace pqscreen
