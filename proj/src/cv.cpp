#include "pqscreen/cv.hpp"

#include "pqscreen/artifact.hpp"
#include "pqscreen/metrics.hpp"
#include "pqscreen/stats.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace pqscreen {

std::string_view selector_kind_name(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::Wilcoxon: return "wilcoxon";
    case SelectorKind::Lasso: return "lasso";
    case SelectorKind::Pca: return "pca";
  }
  return "wilcoxon";
}

SelectorKind parse_selector_kind(std::string_view text) {
  if (text == "wilcoxon") return SelectorKind::Wilcoxon;
  if (text == "lasso") return SelectorKind::Lasso;
  if (text == "pca") return SelectorKind::Pca;
  throw Error("invalid_argument", "unknown selector '" + std::string(text) + "' (wilcoxon, lasso, pca)");
}

std::string_view ci_unit_name(CiUnit unit) { return unit == CiUnit::Record ? "record" : "repetition"; }

CiUnit parse_ci_unit(std::string_view text) {
  if (text == "record") return CiUnit::Record;
  if (text == "repetition") return CiUnit::Repetition;
  throw Error("invalid_argument", "unknown CI unit '" + std::string(text) + "' (record, repetition)");
}

double metric_value(const MetricRecord& record, std::string_view metric) {
  if (metric == "accuracy") return record.accuracy;
  if (metric == "sensitivity") return record.sensitivity;
  if (metric == "specificity") return record.specificity;
  if (metric == "auc") return record.auc;
  throw Error("invalid_argument", "unknown metric '" + std::string(metric) + "'");
}

std::map<std::string, MetricSummary> aggregate_records(const std::vector<MetricRecord>& records, CiUnit unit) {
  std::map<std::string, MetricSummary> out;
  if (records.empty()) return out;
  for (const char* metric : kMetricNames) {
    std::vector<double> values;
    if (unit == CiUnit::Record) {
      for (const auto& r : records) values.push_back(metric_value(r, metric));
    } else {
      std::map<std::size_t, std::pair<double, std::size_t>> per_rep;
      for (const auto& r : records) {
        auto& [sum, count] = per_rep[r.repetition];
        sum += metric_value(r, metric);
        ++count;
      }
      for (const auto& [rep, sc] : per_rep) values.push_back(sc.first / static_cast<double>(sc.second));
    }
    MetricSummary s;
    s.mean = stats::mean(values);
    if (values.size() >= 2) {
      const auto [lo, hi] = stats::ci95(values);
      s.ci_low = lo;
      s.ci_high = hi;
    } else {
      s.ci_low = s.ci_high = s.mean;
    }
    out[metric] = s;
  }
  return out;
}

Selector fit_selector(SelectorKind kind, const Matrix& x, std::span<const int> y, const CvConfig& config,
                      std::uint64_t seed) {
  switch (kind) {
    case SelectorKind::Wilcoxon: return wilcoxon_filter(x, y, config.wilcoxon_alpha);
    case SelectorKind::Lasso: {
      LassoOptions options;
      options.seed = seed;
      return lasso_select(x, y, options).mask;
    }
    case SelectorKind::Pca: return pca_fit(x, config.pca_threshold);
  }
  throw Error("internal", "unhandled selector");
}

double tuning_objective(ModelKind kind, const Matrix& z, std::span<const int> y, std::span<const std::size_t> unit_of,
                        Scheme scheme, std::size_t inner_k, const Hyperparameters& hp, std::uint64_t seed) {
  try {
    if (kind == ModelKind::Forest) {
      const Model m = fit_model(kind, z, y, hp, seed);
      return std::get<ForestModel>(m).oob_error;
    }
    const FoldPlan plan = make_fold_plan(y, unit_of, scheme, inner_k, derive_seed(seed, 10));
    std::size_t wrong = 0;
    const double threshold = decision_threshold(kind);
    for (std::size_t f = 0; f < plan.k(); ++f) {
      const auto train = plan.train_indices(f);
      const auto& test = plan.folds[f];
      Matrix zt(static_cast<Eigen::Index>(train.size()), z.cols());
      std::vector<int> yt(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        zt.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(train[i]));
        yt[i] = y[train[i]];
      }
      Matrix zv(static_cast<Eigen::Index>(test.size()), z.cols());
      for (std::size_t i = 0; i < test.size(); ++i) zv.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(test[i]));
      const Model m = fit_model(kind, zt, yt, hp, derive_seed(seed, 11, f));
      const Vector s = predict_scores(m, zv);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const int predicted = s(static_cast<Eigen::Index>(i)) >= threshold ? 1 : 0;
        if (predicted != y[test[i]]) ++wrong;
      }
    }
    return static_cast<double>(wrong) / static_cast<double>(y.size());
  } catch (const Error& e) {
    // Hyperparameters the learner cannot fit count as failed evaluations.
    if (e.code() == "convergence" || e.code() == "not_learnable") return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

namespace {

struct FoldOutcome {
  MetricRecord record;
  std::vector<Misclassification> misclassified;
};

std::vector<std::string> selected_names(const Selector& selector) {
  std::vector<std::string> names;
  if (const auto* mask = std::get_if<FeatureMask>(&selector)) {
    for (auto i : mask->selected) names.emplace_back(feature_names()[i]);
  } else {
    const auto r = std::get<PcaTransform>(selector).retained();
    for (std::size_t k = 0; k < r; ++k) names.push_back("PC" + std::to_string(k + 1));
  }
  return names;
}

FoldOutcome run_fold(const Cohort& cohort, const Matrix& x, const std::vector<int>& y, const CvConfig& config,
                     const FoldPlan& plan, std::size_t rep, std::size_t fold, std::uint64_t rep_seed) {
  const auto train = plan.train_indices(fold);
  const auto& test = plan.folds[fold];
  const std::string where = "repetition " + std::to_string(rep) + ", fold " + std::to_string(fold);
  Matrix xt(static_cast<Eigen::Index>(train.size()), x.cols());
  std::vector<int> yt(train.size());
  std::vector<std::size_t> unit_of(train.size());
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < train.size(); ++i) {
    xt.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(train[i]));
    yt[i] = y[train[i]];
    has[yt[i]] = true;
    unit_of[i] = config.scheme == Scheme::SubjectWise ? cohort.subject_index()[train[i]] : i;
  }
  if (!has[0] || !has[1]) throw Error("class_absent", where + ": training data lacks a class");
  Matrix xv(static_cast<Eigen::Index>(test.size()), x.cols());
  std::vector<int> yv(test.size());
  bool test_has[2] = {false, false};
  for (std::size_t i = 0; i < test.size(); ++i) {
    xv.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(test[i]));
    yv[i] = y[test[i]];
    test_has[yv[i]] = true;
  }
  if (!test_has[0] || !test_has[1]) throw Error("class_absent", where + ": test data lacks a class");

  try {
    const Selector selector = fit_selector(config.selector, xt, yt, config, derive_seed(rep_seed, 1, fold));
    const Matrix zt = apply_selector(selector, xt);
    const Matrix zv = apply_selector(selector, xv);

    FoldOutcome out;
    auto& rec = out.record;
    rec.repetition = rep;
    rec.fold = fold;
    rec.n_train = train.size();
    rec.n_test = test.size();
    rec.selected_features = selected_names(selector);
    rec.hyperparameters = default_hyperparameters(config.model, static_cast<std::size_t>(zt.cols()));
    const SearchSpace space = default_search_space(config.model);
    if (config.tune_budget > 0 && space.size() > 0) {
      const std::uint64_t tune_seed = derive_seed(rep_seed, 2, fold);
      auto objective = [&](const Hyperparameters& hp) {
        return tuning_objective(config.model, zt, yt, unit_of, config.scheme, config.inner_k, hp, tune_seed);
      };
      TuneResult tuned = bayes_optimize(objective, space, config.tune_budget, tune_seed);
      for (const auto& [name, value] : tuned.best_point) rec.hyperparameters[name] = value;
      rec.tuning = std::move(tuned);
    }
    const Model model = fit_model(config.model, zt, yt, rec.hyperparameters, derive_seed(rep_seed, 3, fold));
    const Vector scores = predict_scores(model, zv);
    const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
    const double threshold = decision_threshold(config.model);
    const Confusion c = confusion_metrics(s, yv, threshold);
    rec.accuracy = c.accuracy;
    rec.sensitivity = c.sensitivity;
    rec.specificity = c.specificity;
    rec.auc = roc_auc(s, yv);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const int predicted = s[i] >= threshold ? 1 : 0;
      if (predicted == yv[i]) continue;
      const auto& obs = cohort[test[i]];
      out.misclassified.push_back({rep, fold, test[i], obs.subject_id, obs.visit_index, yv[i], predicted, s[i]});
    }
    return out;
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.what());
  }
}

}  // namespace

CVReport run_nested_cv(const Cohort& cohort, const CvConfig& config) {
  if (config.k < 2) throw Error("invalid_argument", "k must be at least 2");
  if (config.repetitions < 1) throw Error("invalid_argument", "repetitions must be at least 1");
  if (config.inner_k < 2) throw Error("invalid_argument", "inner_k must be at least 2");
  if (!cohort.has_both_classes()) throw Error("single_class", "cohort needs both classes");
  const Matrix x = cohort.feature_matrix();
  const std::vector<int> y = cohort.labels();

  std::vector<FoldPlan> plans;
  std::vector<std::uint64_t> rep_seeds;
  for (std::size_t r = 0; r < config.repetitions; ++r) {
    const std::uint64_t rs = derive_seed(config.seed, 100, r);
    rep_seeds.push_back(rs);
    plans.push_back(make_fold_plan(cohort, config.scheme, config.k, derive_seed(rs, 0)));
  }

  const std::size_t tasks = config.repetitions * config.k;
  std::vector<FoldOutcome> outcomes(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const std::size_t r = t / config.k, f = t % config.k;
      try {
        outcomes[t] = run_fold(cohort, x, y, config, plans[r], r, f, rep_seeds[r]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, tasks));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CVReport report;
  report.config = config;
  report.data_fingerprint = cohort_fingerprint(cohort);
  for (auto& o : outcomes) {
    report.records.push_back(std::move(o.record));
    for (auto& m : o.misclassified) report.misclassified.push_back(std::move(m));
  }
  report.aggregates = aggregate_records(report.records, config.ci_unit);
  return report;
}

}  // namespace pqscreen
