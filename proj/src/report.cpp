#include "pqscreen/report.hpp"

#include <fstream>

namespace pqscreen {

using nlohmann::json;

nlohmann::json cv_config_json(const CvConfig& c) {
  return {{"scheme", scheme_name(c.scheme)},
          {"selector", selector_kind_name(c.selector)},
          {"model", model_kind_name(c.model)},
          {"k", c.k},
          {"repetitions", c.repetitions},
          {"seed", c.seed},
          {"tune_budget", c.tune_budget},
          {"inner_k", c.inner_k},
          {"wilcoxon_alpha", c.wilcoxon_alpha},
          {"pca_threshold", c.pca_threshold},
          {"ci_unit", ci_unit_name(c.ci_unit)}};
}

CvConfig cv_config_from_json(const nlohmann::json& j) {
  CvConfig c;
  c.scheme = parse_scheme(j.at("scheme").get<std::string>());
  c.selector = parse_selector_kind(j.at("selector").get<std::string>());
  c.model = parse_model_kind(j.at("model").get<std::string>());
  c.k = j.at("k").get<std::size_t>();
  c.repetitions = j.at("repetitions").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.tune_budget = j.value("tune_budget", std::size_t{0});
  c.inner_k = j.value("inner_k", std::size_t{10});
  c.wilcoxon_alpha = j.value("wilcoxon_alpha", 0.05);
  c.pca_threshold = j.value("pca_threshold", 0.99);
  c.ci_unit = parse_ci_unit(j.value("ci_unit", std::string("record")));
  return c;
}

nlohmann::json tune_result_json(const TuneResult& result) {
  json history = json::array();
  for (const auto& e : result.history) history.push_back({{"point", e.point}, {"objective", e.objective}});
  return {{"best_point", result.best_point}, {"best_objective", result.best_objective}, {"history", history}};
}

namespace {

TuneResult tune_result_from(const json& j) {
  TuneResult r;
  r.best_point = j.at("best_point").get<Hyperparameters>();
  r.best_objective = j.at("best_objective").get<double>();
  for (const auto& e : j.at("history")) {
    r.history.push_back({e.at("point").get<Hyperparameters>(), e.at("objective").get<double>()});
  }
  return r;
}

}  // namespace

nlohmann::json report_to_json(const CVReport& report, const nlohmann::json& run_config) {
  json records = json::array();
  for (const auto& r : report.records) {
    json rec = {{"repetition", r.repetition},   {"fold", r.fold},
                {"accuracy", r.accuracy},       {"sensitivity", r.sensitivity},
                {"specificity", r.specificity}, {"auc", r.auc},
                {"n_train", r.n_train},         {"n_test", r.n_test},
                {"selected_features", r.selected_features},
                {"hyperparameters", r.hyperparameters}};
    if (r.tuning) rec["tuning"] = tune_result_json(*r.tuning);
    records.push_back(std::move(rec));
  }
  json aggregates = json::object();
  for (const auto& [metric, s] : report.aggregates) {
    aggregates[metric] = {{"mean", s.mean}, {"ci_low", s.ci_low}, {"ci_high", s.ci_high}};
  }
  json mis = json::array();
  for (const auto& m : report.misclassified) {
    mis.push_back({{"repetition", m.repetition},
                   {"fold", m.fold},
                   {"observation", m.observation},
                   {"subject_id", m.subject_id},
                   {"visit", m.visit},
                   {"true_label", m.true_label},
                   {"predicted_label", m.predicted_label},
                   {"score", m.score}});
  }
  return {{"toolkit_version", kVersion},
          {"run_config", run_config},
          {"config", cv_config_json(report.config)},
          {"data_fingerprint", report.data_fingerprint},
          {"data_path", report.data_path},
          {"aggregates", aggregates},
          {"records", records},
          {"misclassified", mis}};
}

CVReport report_from_json(const nlohmann::json& doc) {
  try {
    CVReport r;
    r.config = cv_config_from_json(doc.at("config"));
    r.data_fingerprint = doc.value("data_fingerprint", std::string());
    r.data_path = doc.value("data_path", std::string());
    for (const auto& j : doc.at("records")) {
      MetricRecord m;
      m.repetition = j.at("repetition").get<std::size_t>();
      m.fold = j.at("fold").get<std::size_t>();
      m.accuracy = j.at("accuracy").get<double>();
      m.sensitivity = j.at("sensitivity").get<double>();
      m.specificity = j.at("specificity").get<double>();
      m.auc = j.at("auc").get<double>();
      m.n_train = j.value("n_train", std::size_t{0});
      m.n_test = j.value("n_test", std::size_t{0});
      if (j.contains("selected_features")) m.selected_features = j.at("selected_features").get<std::vector<std::string>>();
      if (j.contains("hyperparameters")) m.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
      if (j.contains("tuning")) m.tuning = tune_result_from(j.at("tuning"));
      r.records.push_back(std::move(m));
    }
    for (const auto& [metric, s] : doc.at("aggregates").items()) {
      r.aggregates[metric] = {s.at("mean").get<double>(), s.at("ci_low").get<double>(), s.at("ci_high").get<double>()};
    }
    for (const auto& j : doc.at("misclassified")) {
      Misclassification m;
      m.repetition = j.at("repetition").get<std::size_t>();
      m.fold = j.at("fold").get<std::size_t>();
      m.observation = j.at("observation").get<std::size_t>();
      m.subject_id = j.at("subject_id").get<std::string>();
      m.visit = j.at("visit").get<int>();
      m.true_label = j.at("true_label").get<int>();
      m.predicted_label = j.at("predicted_label").get<int>();
      m.score = j.at("score").get<double>();
      r.misclassified.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error("schema", std::string("malformed report: ") + e.what());
  }
}

CVReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open report '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("schema", "report '" + path + "' is not valid JSON: " + e.what());
  }
  CVReport r = report_from_json(doc);
  if (r.data_path.empty()) r.data_path = doc.value("data_path", std::string());
  return r;
}

void write_comment(std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
}

void write_records_csv(std::ostream& out, const CVReport& report, const std::string& comment) {
  write_comment(out, comment);
  out << "repetition,fold,accuracy,sensitivity,specificity,auc,n_train,n_test,n_selected\n";
  for (const auto& r : report.records) {
    out << r.repetition << ',' << r.fold << ',' << format_double(r.accuracy) << ',' << format_double(r.sensitivity)
        << ',' << format_double(r.specificity) << ',' << format_double(r.auc) << ',' << r.n_train << ','
        << r.n_test << ',' << r.selected_features.size() << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<CVReport>& reports, const std::string& comment) {
  write_comment(out, comment);
  out << "metric,scheme,selector,model,mean,ci_low,ci_high\n";
  for (const char* metric : kMetricNames) {
    for (const auto& r : reports) {
      const auto& s = r.aggregates.at(metric);
      out << metric << ',' << scheme_name(r.config.scheme) << ',' << selector_kind_name(r.config.selector) << ','
          << model_kind_name(r.config.model) << ',' << format_double(s.mean) << ',' << format_double(s.ci_low)
          << ',' << format_double(s.ci_high) << '\n';
    }
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<Comparison>& comparisons, const std::string& comment) {
  write_comment(out, comment);
  out << "metric,method,mean,ci_low,ci_high,best,differs_from_best,anova_f,anova_p\n";
  for (const auto& c : comparisons) {
    for (const auto& e : c.entries) {
      out << c.metric << ',' << e.label << ',' << format_double(e.summary.mean) << ','
          << format_double(e.summary.ci_low) << ',' << format_double(e.summary.ci_high) << ',' << (e.best ? 1 : 0)
          << ',' << (e.differs_from_best ? 1 : 0) << ',' << format_double(c.anova.anova.statistic) << ','
          << format_double(c.anova.anova.p_value) << '\n';
    }
  }
}

void write_moments_csv(std::ostream& out, const GroupMoments& target, const GroupMoments& achieved,
                       const std::string& comment) {
  write_comment(out, comment);
  out << "feature,label,target_mean,target_sd,achieved_mean,achieved_sd\n";
  const auto names = feature_names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    for (Label l : {Label::Normal, Label::EarlyPD}) {
      const auto& t = target.at(f, l);
      const auto& a = achieved.at(f, l);
      out << names[f] << ',' << label_name(l) << ',' << format_double(t.mean) << ',' << format_double(t.sd) << ','
          << format_double(a.mean) << ',' << format_double(a.sd) << '\n';
    }
  }
}

void write_correlation_csv(std::ostream& out, const std::vector<CorrelationRow>& rows, const std::string& comment) {
  write_comment(out, comment);
  out << "feature,rho,p_value,n\n";
  for (const auto& r : rows) {
    out << r.feature << ',' << (r.defined ? format_double(r.rho) : "") << ','
        << (r.defined ? format_double(r.p_value) : "") << ',' << r.n << '\n';
  }
}

}  // namespace pqscreen
