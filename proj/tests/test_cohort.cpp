#include <doctest.h>

#include "pqscreen/cohort.hpp"
#include "support.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

using namespace pqscreen;

namespace {

const char* kHeader =
    "SUBJECT_ID,VISIT,LABEL,P1_SLPN,P1_SLPD,P1_PAIN,P1_URIN,P1_CNST,P1_LTHD,P1_FATG,P2_SPCH,P2_SALV,P2_SWAL,"
    "P2_EAT,P2_DRES,P2_HYGN,P2_HWRT,P2_HOBB,P2_TURN,P2_TRMR,P2_RISE,P2_WALK,P2_FREZ,GENDER,AGE\n";

std::string row(const std::string& id, int visit, int label, int tremor = 0, int first = 0) {
  std::string r = id + "," + std::to_string(visit) + "," + std::to_string(label);
  for (std::size_t i = 0; i < kPqItemCount; ++i) {
    int v = i == 16 ? tremor : 0;
    if (i == 0) v = first;
    r += "," + std::to_string(v);
  }
  return r + ",1,61.5\n";
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() + ": " + e.what();
  }
  return "";
}

Cohort from_text(const std::string& text) {
  std::istringstream in(text);
  return read_cohort(in);
}

}  // namespace

TEST_CASE("three well-formed rows load") {
  const Cohort c = from_text(std::string(kHeader) + row("a", 1, 0) + row("a", 2, 0) + row("b", 1, 1, 3));
  CHECK(c.size() == 3);
  CHECK(c.subject_count() == 2);
  CHECK(c.count(Label::EarlyPD) == 1);
  CHECK(c[2].features.pq_items[16] == 3);
  CHECK(c[0].features.age == doctest::Approx(61.5));
  CHECK(c.feature_matrix().cols() == 22);
}

TEST_CASE("out of range severity names row and column") {
  const std::string msg = code_of([] { from_text(std::string(kHeader) + row("a", 1, 0) + row("b", 1, 1, 5)); });
  CHECK(msg.rfind("range", 0) == 0);
  CHECK(msg.find("P2_TRMR") != std::string::npos);
  CHECK(msg.find("3") != std::string::npos);
}

TEST_CASE("conflicting labels for one subject are rejected") {
  CHECK(code_of([] { from_text(std::string(kHeader) + row("a", 1, 0) + row("a", 2, 1)); }).rfind("label_conflict", 0) ==
        0);
}

TEST_CASE("duplicate subject visit is rejected") {
  CHECK(code_of([] { from_text(std::string(kHeader) + row("a", 1, 0) + row("a", 1, 0)); }).rfind("duplicate", 0) == 0);
}

TEST_CASE("missing column is a schema error") {
  std::string header(kHeader);
  header.replace(header.find(",AGE"), 4, "");
  std::string r = row("a", 1, 0);
  r = r.substr(0, r.rfind(','));
  r += "\n";
  CHECK(code_of([&] { from_text(header + r); }).rfind("schema", 0) == 0);
}

TEST_CASE("column mapping renames a source column") {
  std::string header(kHeader);
  header.replace(header.find("P2_TRMR"), 7, "TREMOR");
  ColumnMapping mapping;
  mapping.renames["P2_TRMR"] = "TREMOR";
  std::istringstream in(header + row("a", 1, 0, 2) + row("b", 1, 1, 4));
  const Cohort c = read_cohort(in, mapping);
  CHECK(c[1].features.pq_items[16] == 4);
}

TEST_CASE("cohort csv round trip") {
  SynthesisOptions opt;
  opt.n_normal_subjects = 12;
  opt.n_pd_subjects = 15;
  opt.seed = 3;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  std::ostringstream out;
  write_cohort(out, c, "generated for a test");
  CHECK(out.str().rfind("# generated for a test\n", 0) == 0);
  const Cohort back = from_text(out.str());
  CHECK(back == c);
  std::ostringstream again;
  write_cohort(again, back, "generated for a test");
  CHECK(again.str() == out.str());
}

TEST_CASE("optional HY and SBR columns survive a round trip") {
  std::string header(kHeader);
  header.pop_back();
  header += ",HY,SBR_RC,SBR_LC,SBR_RP,SBR_LP\n";
  std::string a = row("a", 1, 1);
  a.pop_back();
  a += ",2,2.1,2.2,0.9,1.0\n";
  std::string b = row("b", 1, 0);
  b.pop_back();
  b += ",0,3.0,3.1,2.0,2.1\n";
  const Cohort c = from_text(header + a + b);
  REQUIRE(c.has_hy());
  CHECK(*c[0].hy_stage == 2.0);
  CHECK((*c[1].sbr)[3] == doctest::Approx(2.1));
  std::ostringstream out;
  write_cohort(out, c);
  CHECK(from_text(out.str()) == c);
}

TEST_CASE("synthesis is deterministic per seed") {
  SynthesisOptions opt;
  opt.n_normal_subjects = 20;
  opt.n_pd_subjects = 30;
  opt.seed = 11;
  CHECK(synthesize_cohort(published_moments(), opt) == synthesize_cohort(published_moments(), opt));
  opt.seed = 12;
  SynthesisOptions other = opt;
  other.seed = 11;
  CHECK_FALSE(synthesize_cohort(published_moments(), opt) == synthesize_cohort(published_moments(), other));
}

TEST_CASE("seed 42 cohort matches the published group means") {
  SynthesisOptions opt;
  opt.seed = 42;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  CHECK(c.count(Label::Normal) + c.count(Label::EarlyPD) == c.size());
  CHECK(c.subject_count() == 672);
  const GroupMoments target = published_moments();
  const GroupMoments got = compute_moments(c);
  for (std::size_t j = 0; j < kPqItemCount; ++j) {
    for (Label l : {Label::Normal, Label::EarlyPD}) {
      INFO("feature " << feature_names()[j] << " class " << label_name(l));
      CHECK(std::abs(got.at(j, l).mean - target.at(j, l).mean) <= 0.05);
    }
  }
  // visit averages follow the requested means
  const double n_visits = static_cast<double>(c.count(Label::Normal)) / 198.0;
  const double pd_visits = static_cast<double>(c.count(Label::EarlyPD)) / 474.0;
  CHECK(n_visits == doctest::Approx(5.06).epsilon(0.02));
  CHECK(pd_visits == doctest::Approx(9.92).epsilon(0.02));
}

TEST_CASE("roughly fifteen percent of PD observations show no tremor") {
  SynthesisOptions opt;
  opt.seed = 42;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  const auto h = severity_distribution(c, Label::EarlyPD);
  const double share = static_cast<double>(h[16][0]) / static_cast<double>(c.count(Label::EarlyPD));
  CHECK(share > 0.10);
  CHECK(share < 0.20);
}

TEST_CASE("tremor handwriting and dressing have the largest normal behaviour gaps") {
  SynthesisOptions opt;
  opt.seed = 42;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  auto gap = normal_behavior_gap(c);
  REQUIRE(gap.size() == kPqItemCount);
  std::sort(gap.begin(), gap.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
  std::set<std::string> top = {gap[0].feature, gap[1].feature, gap[2].feature};
  CHECK(top == std::set<std::string>{"P2_TRMR", "P2_HWRT", "P2_DRES"});
}

TEST_CASE("zero mean and zero SD give a constant feature") {
  GroupMoments m = published_moments();
  m.at(5, Label::Normal) = {0.0, 0.0};
  SynthesisOptions opt;
  opt.n_normal_subjects = 30;
  opt.n_pd_subjects = 30;
  opt.seed = 5;
  const Cohort c = synthesize_cohort(m, opt);
  for (const auto& o : c.observations()) {
    if (o.label == Label::Normal) CHECK(o.features.pq_items[5] == 0);
  }
}

TEST_CASE("infeasible moments name the feature") {
  GroupMoments m = published_moments();
  m.at(3, Label::EarlyPD) = {0.5, 3.0};
  SynthesisOptions opt;
  opt.seed = 1;
  const std::string msg = code_of([&] { synthesize_cohort(m, opt); });
  CHECK(msg.rfind("infeasible_moments", 0) == 0);
  CHECK(msg.find("P1_URIN") != std::string::npos);
}

TEST_CASE("severity pmf matches target moments") {
  pqtest::Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const double mean = 0.05 + 3.9 * rng.uniform();
    const double max_sd = std::sqrt(mean * (4.0 - mean));
    const double sd = max_sd * (0.05 + 0.9 * rng.uniform());
    Moments target{mean, sd};
    const auto pmf = severity_pmf(target);
    // Below the lattice minimum the least-dispersed distribution is used.
    const double frac = mean - std::floor(mean);
    const double expected_sd = std::max(sd, std::sqrt(frac * (1.0 - frac)));
    double total = 0, m1 = 0, m2 = 0;
    for (int k = 0; k < 5; ++k) {
      CHECK(pmf[k] >= 0.0);
      total += pmf[k];
      m1 += k * pmf[k];
      m2 += k * k * pmf[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m1 == doctest::Approx(mean).epsilon(1e-6));
    CHECK(std::sqrt(m2 - m1 * m1) == doctest::Approx(expected_sd).epsilon(1e-6));
  }
}

TEST_CASE("large sample moments converge to the targets") {
  SynthesisOptions opt;
  opt.n_normal_subjects = 10000;
  opt.n_pd_subjects = 5100;
  opt.seed = 99;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  REQUIRE(c.count(Label::Normal) >= 50000);
  REQUIRE(c.count(Label::EarlyPD) >= 50000);
  const GroupMoments target = published_moments();
  const GroupMoments got = compute_moments(c);
  for (std::size_t j = 0; j < kPqItemCount; ++j) {
    for (Label l : {Label::Normal, Label::EarlyPD}) {
      CHECK(std::abs(got.at(j, l).mean - target.at(j, l).mean) <= 0.02);
    }
  }
}

TEST_CASE("histogram bins sum to the class count") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthesisOptions opt;
    opt.n_normal_subjects = 7 + seed;
    opt.n_pd_subjects = 9;
    opt.seed = seed;
    const Cohort c = synthesize_cohort(published_moments(), opt);
    for (Label l : {Label::Normal, Label::EarlyPD}) {
      const auto h = severity_distribution(c, l);
      for (const auto& bins : h) {
        std::size_t sum = 0;
        for (auto b : bins) sum += b;
        CHECK(sum == c.count(l));
      }
    }
  }
}

TEST_CASE("single-valued feature gives a one-bin histogram") {
  std::string text(kHeader);
  for (int s = 0; s < 4; ++s) text += row("p" + std::to_string(s), 1, 1, 1);
  text += row("n", 1, 0);
  const Cohort c = from_text(text);
  const auto h = severity_distribution(c, Label::EarlyPD);
  CHECK(h[16] == std::array<std::size_t, 5>{0, 4, 0, 0, 0});
}

TEST_CASE("histogram of an absent class is an error") {
  const Cohort c = from_text(std::string(kHeader) + row("a", 1, 0));
  CHECK(code_of([&] { severity_distribution(c, Label::EarlyPD); }).rfind("class_absent", 0) == 0);
  CHECK(code_of([&] { normal_behavior_gap(c); }).rfind("class_absent", 0) == 0);
}

TEST_CASE("gap is 100 for a feature normal in every control and abnormal in every PD") {
  std::string text(kHeader);
  for (int s = 0; s < 3; ++s) text += row("n" + std::to_string(s), 1, 0);
  for (int s = 0; s < 3; ++s) text += row("p" + std::to_string(s), 1, 1, 2);
  const auto gap = normal_behavior_gap(from_text(text));
  CHECK(gap[16].feature == "P2_TRMR");
  CHECK(gap[16].value == doctest::Approx(100.0));
  CHECK(gap[0].value == doctest::Approx(0.0));
}

TEST_CASE("gap is antisymmetric under a class swap") {
  SynthesisOptions opt;
  opt.n_normal_subjects = 25;
  opt.n_pd_subjects = 40;
  opt.seed = 21;
  const Cohort c = synthesize_cohort(published_moments(), opt);
  std::vector<Observation> swapped = c.observations();
  for (auto& o : swapped) o.label = o.label == Label::Normal ? Label::EarlyPD : Label::Normal;
  const auto a = normal_behavior_gap(c);
  const auto b = normal_behavior_gap(Cohort(swapped));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == doctest::Approx(-b[i].value));
}

TEST_CASE("feature vector validation") {
  FeatureVector v;
  v.age = 70;
  CHECK_NOTHROW(v.validate());
  v.pq_items[4] = -1;
  CHECK_THROWS_AS(v.validate(), Error);
  v.pq_items[4] = 0;
  v.gender = 2;
  CHECK_THROWS_AS(v.validate(), Error);
  CHECK(feature_index("AGE") == kAgeIndex);
  CHECK(feature_index("GENDER") == kGenderIndex);
  CHECK_FALSE(feature_index("P3_X").has_value());
}
