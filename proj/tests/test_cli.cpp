#include <doctest.h>

#include "pqscreen/artifact.hpp"
#include "pqscreen/cli.hpp"
#include "pqscreen/cohort.hpp"
#include "support.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pqscreen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pqscreen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pqscreen_cli_" + std::to_string(std::hash<std::string>{}(
                                                               std::to_string(reinterpret_cast<std::uintptr_t>(this)))));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string make_cohort(const TempDir& dir) {
  const auto path = dir / "c.csv";
  const auto r = run({"synth", "--normals", "20", "--pd", "30", "--visits-normal", "2", "--visits-pd", "3", "--seed",
                      "4", "--out", path});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("synth is byte reproducible and writes a moments report") {
  TempDir dir;
  REQUIRE(run({"synth", "--normals", "198", "--pd", "474", "--seed", "42", "--out", dir / "a.csv"}).code == 0);
  const auto a = slurp(dir / "a.csv");
  REQUIRE(run({"synth", "--normals", "198", "--pd", "474", "--seed", "42", "--out", dir / "a.csv"}).code == 0);
  CHECK(a == slurp(dir / "a.csv"));
  REQUIRE(run({"synth", "--normals", "198", "--pd", "474", "--seed", "43", "--out", dir / "b.csv"}).code == 0);
  CHECK(a != slurp(dir / "b.csv"));
  CHECK(a.find("SUBJECT_ID,VISIT,LABEL,P1_SLPN") != std::string::npos);
  CHECK(fs::exists(dir / "a.csv.moments.csv"));
  CHECK(load_cohort(dir / "a.csv").size() == 5704);
}

TEST_CASE("usage errors exit 2") {
  TempDir dir;
  auto r = run({"synth", "--normals", "0", "--pd", "4", "--seed", "1", "--out", dir / "x.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: usage: ", 0) == 0);
  CHECK(run({"synth", "--normals", "3", "--pd", "4", "--out", dir / "x.csv"}).code == 2);
  CHECK(run({"nonsense"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("version and help") {
  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out == std::string(kVersion) + "\n");
  const auto h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("synth") != std::string::npos);
}

TEST_CASE("cv writes a report with repetitions times folds records") {
  TempDir dir;
  const auto data = make_cohort(dir);
  const auto r = run({"cv", "--data", data, "--scheme", "record", "--selector", "wilcoxon", "--model", "logistic",
                      "--reps", "2", "--k", "4", "--seed", "7", "--out-dir", dir / "out"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total-score baseline AUC") != std::string::npos);
  const auto report = json::parse(slurp(dir / "out/cv_record_wilcoxon_logistic.json"));
  CHECK(report.at("records").size() == 8);
  CHECK(report.at("run_config").at("seed") == 7);
  CHECK(report.contains("toolkit_version"));
  CHECK(fs::exists(dir / "out/cv_record_wilcoxon_logistic.records.csv"));
  CHECK(fs::exists(dir / "out/cv_summary.csv"));
}

TEST_CASE("cv over every selector and model writes twelve reports") {
  TempDir dir;
  const auto data = make_cohort(dir);
  const auto r = run({"cv", "--data", data, "--selector", "all", "--model", "all", "--reps", "1", "--k", "3",
                      "--seed", "1", "--tune-budget", "0", "--out-dir", dir / "grid"});
  REQUIRE(r.code == 0);
  std::size_t reports = 0;
  for (const auto& e : fs::directory_iterator(dir / "grid")) {
    const auto name = e.path().filename().string();
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") ++reports;
  }
  CHECK(reports == 12);
}

TEST_CASE("subject-wise cv on one subject per class fails in planning") {
  TempDir dir;
  std::vector<Observation> rows;
  for (int s = 0; s < 2; ++s) {
    for (int v = 0; v < 5; ++v) {
      Observation o;
      o.subject_id = "s" + std::to_string(s);
      o.visit_index = v;
      o.label = s ? Label::EarlyPD : Label::Normal;
      o.features.pq_items[16] = s * 2 + v % 2;
      o.features.age = 60;
      rows.push_back(o);
    }
  }
  save_cohort(dir / "two.csv", Cohort(rows));
  const auto r = run({"cv", "--data", dir / "two.csv", "--scheme", "subject", "--reps", "1", "--seed", "1",
                      "--out-dir", dir / "o"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: fold_plan: ", 0) == 0);
}

TEST_CASE("score with the published model") {
  auto r = run({"score", "--model", "paper-eq1"});
  REQUIRE(r.code == 0);
  auto body = json::parse(r.out);
  CHECK(body.at("linear_score").get<double>() == doctest::Approx(0.54813).epsilon(1e-12));
  r = run({"score", "--model", "paper-eq1", "--set", "P2_TRMR=4", "--age", "66", "--gender", "1"});
  REQUIRE(r.code == 0);
  body = json::parse(r.out);
  CHECK(body.at("probability").get<double>() > 0.9999);
  CHECK(body.at("run_config").at("command") == "score");
  r = run({"score", "--set", "P1_PAIN=7"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: validation: features.P1_PAIN", 0) == 0);
  CHECK(run({"score", "--set", "P9=1"}).code != 0);
}

TEST_CASE("score from a request file") {
  TempDir dir;
  json features = json::object();
  for (std::size_t i = 0; i < kPqItemCount; ++i) features[std::string(feature_names()[i])] = 0;
  std::ofstream(dir / "req.json") << json{{"features", features}, {"age", 66.42}, {"gender", 0}}.dump();
  const auto r = run({"score", "--json", dir / "req.json"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("probability").get<double>() == doctest::Approx(0.1716).epsilon(1e-3));
}

TEST_CASE("train then score a fitted artifact") {
  TempDir dir;
  const auto data = make_cohort(dir);
  auto r = run({"train", "--data", data, "--model", "logistic", "--selector", "wilcoxon", "--out", dir / "m.json"});
  REQUIRE(r.code == 0);
  const auto artifact = load_artifact(dir / "m.json");
  CHECK(artifact.kind() == ModelKind::Logistic);
  CHECK(artifact.training.data_fingerprint == cohort_fingerprint(load_cohort(data)));
  CHECK(artifact.model_id == "m");
  r = run({"score", "--model", dir / "m.json", "--set", "P2_TRMR=3"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("model_id") == "m");

  r = run({"train", "--data", data, "--model", "forest", "--out", dir / "f.json"});
  CHECK(r.code == 2);
  r = run({"train", "--data", data, "--model", "forest", "--seed", "3", "--param", "n_trees=20", "--out",
           dir / "f.json"});
  REQUIRE(r.code == 0);
  CHECK(load_artifact(dir / "f.json").training.hyperparameters.at("n_trees") == 20);
}

TEST_CASE("importance needs the training data") {
  TempDir dir;
  const auto data = make_cohort(dir);
  REQUIRE(run({"train", "--data", data, "--model", "forest", "--seed", "3", "--param", "n_trees=30", "--out",
               dir / "f.json"})
              .code == 0);
  auto doc = json::parse(slurp(dir / "f.json"));
  doc["training"]["data_path"] = "";
  std::ofstream(dir / "g.json") << doc.dump();
  auto r = run({"importance", "--model", dir / "g.json", "--seed", "1", "--out", dir / "imp.csv"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: missing_data: ", 0) == 0);
  r = run({"importance", "--model", dir / "g.json", "--data", data, "--seed", "1", "--out", dir / "imp.csv"});
  CHECK(r.code == 0);
  CHECK(slurp(dir / "imp.csv").find("P2_TRMR") != std::string::npos);
  r = run({"importance", "--data", data, "--seed", "1", "--trees", "40", "--out", dir / "imp2.csv"});
  CHECK(r.code == 0);
}

TEST_CASE("compare two reports") {
  TempDir dir;
  const auto data = make_cohort(dir);
  REQUIRE(run({"cv", "--data", data, "--model", "logistic", "--reps", "1", "--k", "4", "--seed", "2", "--out-dir",
               dir / "o"})
              .code == 0);
  REQUIRE(run({"cv", "--data", data, "--model", "forest", "--reps", "1", "--k", "4", "--seed", "2", "--tune-budget",
               "0", "--out-dir", dir / "o"})
              .code == 0);
  const auto r = run({"compare", "--reports", dir / "o/cv_record_wilcoxon_logistic.json",
                      dir / "o/cv_record_wilcoxon_forest.json", "--metric", "auc", "--out", dir / "cmp.csv"});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "cmp.csv");
  CHECK(text.find("wilcoxon/logistic") != std::string::npos);
  CHECK(text.find("wilcoxon/forest") != std::string::npos);
}

TEST_CASE("correlate requires HY") {
  TempDir dir;
  const auto data = make_cohort(dir);
  auto r = run({"correlate", "--data", data, "--out", dir / "rho.csv"});
  CHECK(r.code == 1);
  std::vector<Observation> rows = load_cohort(data).observations();
  for (auto& o : rows) o.hy_stage = o.label == Label::EarlyPD ? 1.0 + (o.features.pq_items[16] > 1) : 0.0;
  save_cohort(dir / "hy.csv", Cohort(rows));
  r = run({"correlate", "--data", dir / "hy.csv", "--out", dir / "rho.csv"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "rho.csv").find("PQ_TOTAL") != std::string::npos);
}
