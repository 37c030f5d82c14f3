#include "pqscreen/analysis.hpp"

#include "pqscreen/metrics.hpp"

#include <map>

namespace pqscreen {

std::vector<std::size_t> Comparison::best_set() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].best || !entries[i].differs_from_best) out.push_back(i);
  }
  return out;
}

std::string report_label(const CVReport& report) {
  return std::string(selector_kind_name(report.config.selector)) + "/" +
         std::string(model_kind_name(report.config.model));
}

Comparison compare_classifiers(const std::vector<CVReport>& reports, std::string_view metric, double alpha) {
  if (reports.size() < 2) throw Error("invalid_argument", "comparison needs at least two reports");
  const auto& first = reports.front();
  for (const auto& r : reports) {
    if (r.config.scheme != first.config.scheme) {
      throw Error("invalid_argument", "reports use different partitioning schemes");
    }
    if (r.records.size() != first.records.size()) {
      throw Error("invalid_argument", "reports have different record counts");
    }
    if (r.records.size() < 2) throw Error("invalid_argument", "reports need at least two records");
  }
  Comparison out;
  out.metric = std::string(metric);
  out.alpha = alpha;
  std::vector<std::vector<double>> groups;
  for (const auto& r : reports) {
    std::vector<double> values;
    for (const auto& rec : r.records) values.push_back(metric_value(rec, metric));
    groups.push_back(std::move(values));
    ComparisonEntry e;
    e.label = report_label(r);
    e.summary = aggregate_records(r.records, r.config.ci_unit).at(std::string(metric));
    out.entries.push_back(std::move(e));
  }
  // Identical constant groups leave ANOVA undefined; nothing then differs.
  bool all_constant = true;
  for (const auto& g : groups) {
    for (double v : g) all_constant = all_constant && v == groups[0][0];
  }
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (stats::mean(groups[i]) > stats::mean(groups[out.best])) out.best = i;
  }
  out.entries[out.best].best = true;
  if (all_constant) return out;
  out.anova = stats::anova_tukey(groups, alpha);
  for (const auto& pair : out.anova.pairs) {
    if (pair.group_a == out.best) out.entries[pair.group_b].differs_from_best = pair.significant;
    if (pair.group_b == out.best) out.entries[pair.group_a].differs_from_best = pair.significant;
  }
  return out;
}

double total_score_baseline(const Cohort& cohort) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& o : cohort.observations()) {
    scores.push_back(o.features.total_score());
    labels.push_back(to_int(o.label));
  }
  return roc_auc(scores, labels);
}

MisclassificationProfile misclassification_profile(const CVReport& report, const Cohort& cohort) {
  std::map<std::size_t, std::size_t> wrong_count;
  for (const auto& m : report.misclassified) {
    const auto row = cohort.find(m.subject_id, m.visit);
    if (!row) {
      throw Error("invalid_argument", "misclassified observation " + m.subject_id + "/" + std::to_string(m.visit) +
                                          " is not in the cohort");
    }
    ++wrong_count[*row];
  }
  const std::size_t reps = std::max<std::size_t>(1, report.config.repetitions);
  MisclassificationProfile out;
  for (const auto& [row, count] : wrong_count) {
    if (2 * count < reps) continue;
    (cohort[row].label == Label::Normal ? out.normal_rows : out.pd_rows).push_back(row);
  }
  out.normal = severity_distribution(cohort, Label::Normal, out.normal_rows);
  out.pd = severity_distribution(cohort, Label::EarlyPD, out.pd_rows);
  return out;
}

std::vector<CorrelationRow> correlation_with_hy(const Cohort& cohort) {
  if (!cohort.has_hy()) throw Error("invalid_argument", "cohort has no HY column");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (cohort[i].hy_stage) rows.push_back(i);
  }
  std::vector<double> hy;
  for (auto i : rows) hy.push_back(*cohort[i].hy_stage);
  bool constant = true;
  for (double v : hy) constant = constant && v == hy.front();
  if (rows.size() < 3 || constant) throw Error("degenerate", "HY stage is constant or too short to correlate");

  std::vector<CorrelationRow> out;
  auto add = [&](std::string name, const std::vector<double>& xs, const std::vector<double>& ys) {
    CorrelationRow row;
    row.feature = std::move(name);
    row.n = xs.size();
    try {
      const auto r = stats::spearman(xs, ys);
      row.rho = r.statistic;
      row.p_value = r.p_value;
    } catch (const Error&) {
      row.defined = false;
    }
    out.push_back(std::move(row));
  };
  const auto names = feature_names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<double> xs;
    for (auto i : rows) xs.push_back(cohort[i].features.as_reals()[f]);
    add(std::string(names[f]), xs, hy);
  }
  {
    std::vector<double> xs;
    for (auto i : rows) xs.push_back(cohort[i].features.total_score());
    add("PQ_TOTAL", xs, hy);
  }
  static constexpr const char* kSbr[] = {"SBR_RC", "SBR_LC", "SBR_RP", "SBR_LP"};
  for (std::size_t s = 0; s < 4; ++s) {
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& sbr = cohort[rows[k]].sbr;
      if (!sbr) continue;
      xs.push_back((*sbr)[s]);
      ys.push_back(hy[k]);
    }
    if (xs.size() >= 3) add(kSbr[s], xs, ys);
  }
  return out;
}

}  // namespace pqscreen
