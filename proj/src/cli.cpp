#include "pqscreen/cli.hpp"

#include "pqscreen/analysis.hpp"
#include "pqscreen/artifact.hpp"
#include "pqscreen/cv.hpp"
#include "pqscreen/forest.hpp"
#include "pqscreen/report.hpp"
#include "pqscreen/serve.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

namespace pqscreen {

using nlohmann::json;

namespace {

json base_config(const std::string& command) {
  return {{"command", command}, {"toolkit_version", kVersion}};
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("io", "write to '" + path + "' failed");
}

std::string one_line(std::string text) {
  for (auto& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

std::vector<std::string> expand(const std::string& value, std::initializer_list<const char*> all) {
  if (value != "all") return {value};
  return {all.begin(), all.end()};
}

Hyperparameters parse_params(const std::vector<std::string>& items) {
  Hyperparameters hp;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("invalid_argument", "--param expects NAME=VALUE, got '" + item + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
      hp[item.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw Error("invalid_argument", "--param value in '" + item + "' is not a number");
    }
  }
  return hp;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::size_t normals = 0;
  std::size_t pd = 0;
  std::uint64_t seed = 0;
  double visits_normal = 5.06;
  double visits_pd = 9.92;
  std::string out;
  std::string moments_out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthesisOptions o;
  o.n_normal_subjects = a.normals;
  o.n_pd_subjects = a.pd;
  o.visits_normal = a.visits_normal;
  o.visits_pd = a.visits_pd;
  o.seed = a.seed;
  const Cohort cohort = synthesize_cohort(published_moments(), o);
  const std::string moments_path = a.moments_out.empty() ? a.out + ".moments.csv" : a.moments_out;
  json config = base_config("synth");
  config.update({{"normals", a.normals},
                 {"pd", a.pd},
                 {"seed", a.seed},
                 {"visits_normal", a.visits_normal},
                 {"visits_pd", a.visits_pd},
                 {"out", a.out},
                 {"moments_out", moments_path}});
  save_cohort(a.out, cohort, config.dump());
  auto m = open_output(moments_path);
  write_moments_csv(m, published_moments(), compute_moments(cohort), config.dump());
  finish(m, moments_path);
  out << "wrote " << cohort.size() << " observations (" << cohort.count(Label::Normal) << " Normal, "
      << cohort.count(Label::EarlyPD) << " EarlyPD) from " << cohort.subject_count() << " subjects to " << a.out
      << '\n';
  return 0;
}

// ---------------------------------------------------------------- cv

struct CvArgs {
  std::string data;
  std::string scheme = "record";
  std::string selector = "wilcoxon";
  std::string model = "logistic";
  std::size_t k = 10;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::size_t tune_budget = 30;
  std::size_t inner_k = 10;
  std::string ci_unit = "record";
  std::size_t jobs = 1;
  std::string out_dir = ".";
};

int cmd_cv(const CvArgs& a, std::ostream& out) {
  const Cohort cohort = load_cohort(a.data);
  std::filesystem::create_directories(a.out_dir);
  std::vector<CVReport> reports;
  out << std::left << std::setw(8) << "scheme" << std::setw(10) << "selector" << std::setw(10) << "model";
  for (const char* m : kMetricNames) out << std::setw(28) << m;
  out << '\n';
  for (const auto& scheme : expand(a.scheme, {"subject", "record"})) {
    for (const auto& selector : expand(a.selector, {"wilcoxon", "lasso", "pca"})) {
      for (const auto& model : expand(a.model, {"logistic", "forest", "boost", "svm"})) {
        CvConfig c;
        c.scheme = parse_scheme(scheme);
        c.selector = parse_selector_kind(selector);
        c.model = parse_model_kind(model);
        c.k = a.k;
        c.repetitions = a.reps;
        c.seed = a.seed;
        c.tune_budget = a.tune_budget;
        c.inner_k = a.inner_k;
        c.ci_unit = parse_ci_unit(a.ci_unit);
        c.jobs = a.jobs;
        CVReport report = run_nested_cv(cohort, c);
        report.data_path = a.data;
        json config = base_config("cv");
        config.update(cv_config_json(c));
        config.update({{"data", a.data}, {"out_dir", a.out_dir}, {"jobs", a.jobs}});
        const std::string stem = a.out_dir + "/cv_" + scheme + "_" + selector + "_" + model;
        auto jf = open_output(stem + ".json");
        jf << report_to_json(report, config).dump(2) << '\n';
        finish(jf, stem + ".json");
        auto cf = open_output(stem + ".records.csv");
        write_records_csv(cf, report, config.dump());
        finish(cf, stem + ".records.csv");
        out << std::setw(8) << scheme << std::setw(10) << selector << std::setw(10) << model;
        for (const char* m : kMetricNames) {
          const auto& s = report.aggregates.at(m);
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(4) << s.mean << " [" << s.ci_low << "," << s.ci_high << "]";
          out << std::setw(28) << cell.str();
        }
        out << '\n';
        reports.push_back(std::move(report));
      }
    }
  }
  json config = base_config("cv");
  config.update({{"data", a.data}, {"scheme", a.scheme}, {"selector", a.selector}, {"model", a.model},
                 {"k", a.k}, {"repetitions", a.reps}, {"seed", a.seed}, {"tune_budget", a.tune_budget},
                 {"inner_k", a.inner_k}, {"ci_unit", a.ci_unit}});
  const std::string summary = a.out_dir + "/cv_summary.csv";
  auto sf = open_output(summary);
  write_summary_csv(sf, reports, config.dump());
  finish(sf, summary);
  out << "total-score baseline AUC " << std::fixed << std::setprecision(4) << total_score_baseline(cohort) << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string model = "logistic";
  std::string selector = "none";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> params;
  std::size_t tune_budget = 0;
  std::string scheme = "subject";
  std::string out;
  std::string id;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Cohort cohort = load_cohort(a.data);
  const ModelKind kind = parse_model_kind(a.model);
  const bool randomized = kind != ModelKind::Logistic || a.selector == "lasso" || a.tune_budget > 0;
  if (randomized && !a.seed) throw Error("usage", "--seed is required for this model/selector combination");
  const std::uint64_t seed = a.seed.value_or(0);
  const Matrix x = cohort.feature_matrix();
  const std::vector<int> y = cohort.labels();

  ModelArtifact art;
  art.model_id = a.id.empty() ? std::filesystem::path(a.out).stem().string() : a.id;
  for (auto n : feature_names()) art.feature_names.emplace_back(n);
  CvConfig defaults;
  if (a.selector == "none") art.selector = FeatureMask::all(kFeatureCount);
  else art.selector = fit_selector(parse_selector_kind(a.selector), x, y, defaults, derive_seed(seed, 1));
  const Matrix z = apply_selector(art.selector, x);

  Hyperparameters hp = default_hyperparameters(kind, static_cast<std::size_t>(z.cols()));
  json tuning = nullptr;
  const SearchSpace space = default_search_space(kind);
  if (a.tune_budget > 0 && space.size() > 0) {
    const Scheme scheme = parse_scheme(a.scheme);
    std::vector<std::size_t> unit_of(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      unit_of[i] = scheme == Scheme::SubjectWise ? cohort.subject_index()[i] : i;
    }
    auto objective = [&](const Hyperparameters& p) {
      return tuning_objective(kind, z, y, unit_of, scheme, 10, p, derive_seed(seed, 2));
    };
    const TuneResult tuned = bayes_optimize(objective, space, a.tune_budget, derive_seed(seed, 2));
    for (const auto& [name, value] : tuned.best_point) hp[name] = value;
    tuning = tune_result_json(tuned);
  }
  for (const auto& [name, value] : parse_params(a.params)) hp[name] = value;
  art.model = fit_model(kind, z, y, hp, derive_seed(seed, 3));
  if (auto* lm = std::get_if<LogisticModel>(&art.model)) {
    lm->feature_names.clear();
    if (const auto* mask = std::get_if<FeatureMask>(&art.selector)) {
      for (auto i : mask->selected) lm->feature_names.push_back(art.feature_names[i]);
    }
  }

  json config = base_config("train");
  config.update({{"data", a.data}, {"model", a.model}, {"selector", a.selector}, {"tune_budget", a.tune_budget},
                 {"scheme", a.scheme}, {"out", a.out}, {"params", a.params}});
  config["seed"] = a.seed ? json(*a.seed) : json(nullptr);
  if (!tuning.is_null()) config["tuning"] = tuning;
  art.training.seed = seed;
  art.training.hyperparameters = hp;
  art.training.data_fingerprint = cohort_fingerprint(cohort);
  art.training.data_path = a.data;
  art.training.n_train = cohort.size();
  art.training.run_config = config;
  art.validate();
  save_artifact(a.out, art);

  json summary = {{"model_id", art.model_id}, {"model_type", a.model}, {"out", a.out}, {"n_train", cohort.size()},
                  {"input_features", z.cols()}, {"hyperparameters", hp}};
  if (const auto* lm = std::get_if<LogisticModel>(&art.model)) {
    const FitDiagnostics d = goodness_of_fit(*lm, z, y);
    summary["goodness_of_fit"] = {{"model_chi_square", d.model_chi_square}, {"df", d.df},
                                  {"p_value", d.p_value},                   {"cox_snell_r2", d.cox_snell_r2},
                                  {"nagelkerke_r2", d.nagelkerke_r2},       {"ll_model", d.ll_model},
                                  {"ll_null", d.ll_null}};
    summary["separation_warning"] = lm->separation_warning;
  }
  if (const auto* fm = std::get_if<ForestModel>(&art.model)) summary["oob_error"] = fm->oob_error;
  out << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  std::string model = kPublishedModelId;
  std::vector<std::string> sets;
  double age = 0.0;
  int gender = 0;
  std::string json_path;
};

int cmd_score(const ScoreArgs& a, std::ostream& out) {
  ScoringService service(load_artifact(a.model));
  std::string body;
  if (!a.json_path.empty()) {
    std::ostringstream buf;
    if (a.json_path == "-") {
      buf << std::cin.rdbuf();
    } else {
      std::ifstream in(a.json_path);
      if (!in) throw Error("io", "cannot open '" + a.json_path + "'");
      buf << in.rdbuf();
    }
    body = buf.str();
  } else {
    json features = json::object();
    for (std::size_t i = 0; i < kPqItemCount; ++i) features[std::string(feature_names()[i])] = 0;
    for (const auto& item : a.sets) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error("usage", "--set expects NAME=VALUE, got '" + item + "'");
      const std::string name = item.substr(0, eq);
      const auto idx = feature_index(name);
      if (!idx || *idx >= kPqItemCount) throw Error("invalid_argument", "unknown questionnaire item '" + name + "'");
      const std::string text = item.substr(eq + 1);
      try {
        std::size_t used = 0;
        const long v = std::stol(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        features[name] = v;
      } catch (const std::exception&) {
        throw Error("invalid_argument", name + " must be an integer 0-4, got '" + text + "'");
      }
    }
    body = json{{"features", features}, {"age", a.age}, {"gender", a.gender}}.dump();
  }
  const HttpReply reply = service.score(body);
  json response = json::parse(reply.body);
  if (reply.status != 200) {
    std::string message;
    for (const auto& e : response.at("errors")) {
      if (!message.empty()) message += "; ";
      const auto field = e.at("field").get<std::string>();
      message += (field.empty() ? "" : field + ": ") + e.at("message").get<std::string>();
    }
    throw Error("validation", message);
  }
  json config = base_config("score");
  config.update({{"model", a.model}, {"set", a.sets}, {"age", a.age}, {"gender", a.gender}, {"json", a.json_path}});
  response["run_config"] = config;
  out << response.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- importance

struct ImportanceArgs {
  std::string model;
  std::string data;
  std::uint64_t seed = 0;
  std::size_t trees = 500;
  std::string out;
};

int cmd_importance(const ImportanceArgs& a, std::ostream& out) {
  std::string data_path = a.data;
  ModelArtifact art;
  if (!a.model.empty()) {
    art = load_artifact(a.model);
    if (art.kind() != ModelKind::Forest) throw Error("invalid_argument", "importance needs a forest artifact");
    if (data_path.empty()) data_path = art.training.data_path;
    if (data_path.empty()) {
      throw Error("missing_data", "artifact records no training data; pass --data with the training CSV");
    }
  } else if (data_path.empty()) {
    throw Error("usage", "pass --model (forest artifact) or --data (fit a forest on all features)");
  }
  const Cohort cohort = load_cohort(data_path);
  const std::vector<int> y = cohort.labels();
  if (!a.model.empty()) {
    if (!art.training.data_fingerprint.empty() && art.training.data_fingerprint != cohort_fingerprint(cohort)) {
      throw Error("data_mismatch", "'" + data_path + "' is not the data the forest was trained on");
    }
  } else {
    for (auto n : feature_names()) art.feature_names.emplace_back(n);
    art.selector = FeatureMask::all(kFeatureCount);
    ForestParams p;
    p.n_trees = a.trees;
    p.seed = a.seed;
    art.model = fit_random_forest(cohort.feature_matrix(), y, p);
  }
  const Matrix z = apply_selector(art.selector, artifact_inputs(art, cohort.feature_matrix()));
  const auto scores = permutation_importance(std::get<ForestModel>(art.model), z, y, a.seed);
  std::vector<std::string> names;
  if (const auto* mask = std::get_if<FeatureMask>(&art.selector)) {
    for (auto i : mask->selected) names.push_back(art.feature_names[i]);
  } else {
    for (std::size_t k = 0; k < scores.size(); ++k) names.push_back("PC" + std::to_string(k + 1));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  json config = base_config("importance");
  config.update({{"model", a.model}, {"data", data_path}, {"seed", a.seed}, {"trees", a.trees}, {"out", a.out}});
  auto f = open_output(a.out);
  write_comment(f, config.dump());
  f << "feature,score,rank\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    f << names[order[r]] << ',' << format_double(scores[order[r]]) << ',' << r + 1 << '\n';
  }
  finish(f, a.out);
  for (std::size_t r = 0; r < order.size(); ++r) {
    out << std::left << std::setw(10) << names[order[r]] << ' ' << std::fixed << std::setprecision(3)
        << scores[order[r]] << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> reports;
  std::string metric = "all";
  double alpha = 0.05;
  std::string out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  std::vector<CVReport> reports;
  for (const auto& path : a.reports) reports.push_back(load_report(path));
  std::vector<Comparison> comparisons;
  for (const auto& metric : expand(a.metric, {"accuracy", "sensitivity", "specificity", "auc"})) {
    comparisons.push_back(compare_classifiers(reports, metric, a.alpha));
  }
  json config = base_config("compare");
  config.update({{"reports", a.reports}, {"metric", a.metric}, {"alpha", a.alpha}, {"out", a.out}});
  auto f = open_output(a.out);
  write_comparison_csv(f, comparisons, config.dump());
  finish(f, a.out);
  for (const auto& c : comparisons) {
    out << c.metric << ": best " << c.entries[c.best].label << "; not significantly worse:";
    for (auto i : c.best_set()) {
      if (i != c.best) out << ' ' << c.entries[i].label;
    }
    out << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- correlate

int cmd_correlate(const std::string& data, const std::string& out_path, std::ostream& out) {
  const Cohort cohort = load_cohort(data);
  const auto rows = correlation_with_hy(cohort);
  json config = base_config("correlate");
  config.update({{"data", data}, {"out", out_path}});
  auto f = open_output(out_path);
  write_correlation_csv(f, rows, config.dump());
  finish(f, out_path);
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << r.feature << ' ';
    if (r.defined) out << std::fixed << std::setprecision(3) << r.rho << "  p=" << std::scientific << r.p_value;
    else out << "undefined (constant column)";
    out << std::defaultfloat << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- serve

HttpServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& model, const std::string& host, int port, std::ostream& out) {
  auto service = std::make_shared<const ScoringService>(load_artifact(model));
  HttpServer server(service);
  const int bound = server.bind(host, port);
  out << "serving " << service->artifact().model_id << " on http://" << host << ':' << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("PQSCREEN_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Questionnaire-based early Parkinson's disease screening toolkit", "pqscreen"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic cohort calibrated to the published group moments");
  s->add_option("--normals", synth.normals, "Normal subjects")->required()->check(CLI::PositiveNumber);
  s->add_option("--pd", synth.pd, "Early-PD subjects")->required()->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "Random seed")->required();
  s->add_option("--visits-normal", synth.visits_normal, "Mean visits per Normal subject")->check(CLI::Range(1.0, 50.0));
  s->add_option("--visits-pd", synth.visits_pd, "Mean visits per early-PD subject")->check(CLI::Range(1.0, 50.0));
  s->add_option("--out", synth.out, "Cohort CSV path")->required();
  s->add_option("--moments-out", synth.moments_out, "Moments report CSV (default <out>.moments.csv)");

  CvArgs cv;
  cv.jobs = default_jobs();
  auto* c = app.add_subcommand("cv", "Repeated nested cross-validation");
  c->add_option("--data", cv.data, "Cohort CSV")->required();
  c->add_option("--scheme", cv.scheme, "subject, record or all")->check(CLI::IsMember({"subject", "record", "all"}));
  c->add_option("--selector", cv.selector, "wilcoxon, lasso, pca or all")
      ->check(CLI::IsMember({"wilcoxon", "lasso", "pca", "all"}));
  c->add_option("--model", cv.model, "logistic, forest, boost, svm or all")
      ->check(CLI::IsMember({"logistic", "forest", "boost", "svm", "all"}));
  c->add_option("--k", cv.k, "Outer folds")->check(CLI::Range(2, 1000));
  c->add_option("--reps", cv.reps, "Repetitions")->check(CLI::PositiveNumber);
  c->add_option("--seed", cv.seed, "Master seed")->required();
  c->add_option("--tune-budget", cv.tune_budget, "Tuning evaluations per outer fold (0: defaults)");
  c->add_option("--inner-k", cv.inner_k, "Inner folds for tuning")->check(CLI::Range(2, 1000));
  c->add_option("--ci-unit", cv.ci_unit, "record or repetition")->check(CLI::IsMember({"record", "repetition"}));
  c->add_option("--jobs", cv.jobs, "Worker threads (env PQSCREEN_JOBS)")->check(CLI::PositiveNumber);
  c->add_option("--out-dir", cv.out_dir, "Directory for reports");

  TrainArgs train;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "Fit one model on the full data and write a model artifact");
  t->add_option("--data", train.data, "Cohort CSV")->required();
  t->add_option("--model", train.model, "logistic, forest, boost or svm")
      ->check(CLI::IsMember({"logistic", "forest", "boost", "svm"}));
  t->add_option("--selector", train.selector, "none, wilcoxon, lasso or pca")
      ->check(CLI::IsMember({"none", "wilcoxon", "lasso", "pca"}));
  auto* train_seed_opt = t->add_option("--seed", train_seed, "Random seed");
  t->add_option("--param", train.params, "Hyperparameter NAME=VALUE (repeatable)");
  t->add_option("--tune-budget", train.tune_budget, "Tune hyperparameters with this many evaluations");
  t->add_option("--scheme", train.scheme, "Inner split for tuning: subject or record")
      ->check(CLI::IsMember({"subject", "record"}));
  t->add_option("--out", train.out, "Artifact JSON path")->required();
  t->add_option("--id", train.id, "Model id (default: output file stem)");

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Score one questionnaire with a model artifact");
  sc->add_option("--model", score.model, "Artifact path or built-in 'paper-eq1'");
  sc->add_option("--set", score.sets, "Item severity NAME=VALUE (repeatable; unset items are 0)");
  sc->add_option("--age", score.age, "Age in years");
  sc->add_option("--gender", score.gender, "Gender code 0 or 1");
  sc->add_option("--json", score.json_path, "Request JSON file ('-' for stdin) instead of flags");

  ImportanceArgs imp;
  auto* im = app.add_subcommand("importance", "Out-of-bag permutation importance of a random forest");
  im->add_option("--model", imp.model, "Forest artifact");
  im->add_option("--data", imp.data, "Training cohort CSV");
  im->add_option("--seed", imp.seed, "Permutation seed")->required();
  im->add_option("--trees", imp.trees, "Trees when fitting a new forest")->check(CLI::PositiveNumber);
  im->add_option("--out", imp.out, "Scores CSV")->required();

  CompareArgs cmp;
  auto* co = app.add_subcommand("compare", "ANOVA and Tukey-Kramer comparison of CV reports");
  co->add_option("--reports", cmp.reports, "CV report JSON files")->required()->expected(2, 1000);
  co->add_option("--metric", cmp.metric, "accuracy, sensitivity, specificity, auc or all")
      ->check(CLI::IsMember({"accuracy", "sensitivity", "specificity", "auc", "all"}));
  co->add_option("--alpha", cmp.alpha, "Family-wise significance level")->check(CLI::Range(1e-6, 0.5));
  co->add_option("--out", cmp.out, "Comparison CSV")->required();

  std::string corr_data, corr_out;
  auto* cr = app.add_subcommand("correlate", "Spearman correlation of features with HY stage");
  cr->add_option("--data", corr_data, "Cohort CSV with an HY column")->required();
  cr->add_option("--out", corr_out, "Correlation CSV")->required();

  std::string serve_model = kPublishedModelId, serve_host = "127.0.0.1";
  int serve_port = kDefaultPort;
  auto* sv = app.add_subcommand("serve", "HTTP scoring service");
  sv->add_option("--model", serve_model, "Artifact path or built-in 'paper-eq1'");
  sv->add_option("--host", serve_host, "Bind address");
  sv->add_option("--port", serve_port, "TCP port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (c->parsed()) return cmd_cv(cv, out);
    if (t->parsed()) {
      if (train_seed_opt->count() > 0) train.seed = train_seed;
      return cmd_train(train, out);
    }
    if (sc->parsed()) {
      if (!score.json_path.empty() && (!score.sets.empty() || sc->count("--age") || sc->count("--gender"))) {
        throw Error("usage", "--json cannot be combined with --set/--age/--gender");
      }
      return cmd_score(score, out);
    }
    if (im->parsed()) return cmd_importance(imp, out);
    if (co->parsed()) return cmd_compare(cmp, out);
    if (cr->parsed()) return cmd_correlate(corr_data, corr_out, out);
    if (sv->parsed()) return cmd_serve(serve_model, serve_host, serve_port, out);
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << one_line(e.what()) << '\n';
    return e.code() == "usage" ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  err << "error: usage: no command given\n";
  return 2;
}

}  // namespace pqscreen
