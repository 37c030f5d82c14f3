#include "pqscreen/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace pqscreen {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "P1_SLPN", "P1_SLPD", "P1_PAIN", "P1_URIN", "P1_CNST", "P1_LTHD", "P1_FATG", "P2_SPCH",
    "P2_SALV", "P2_SWAL", "P2_EAT",  "P2_DRES", "P2_HYGN", "P2_HWRT", "P2_HOBB", "P2_TURN",
    "P2_TRMR", "P2_RISE", "P2_WALK", "P2_FREZ", "GENDER",  "AGE"};

constexpr std::array<std::string_view, kFeatureCount> kTitles = {
    "Sleep Problems",
    "Daytime Sleepiness",
    "Pain and other sensations",
    "Urinary problems",
    "Constipation problems",
    "Light Headedness on standing",
    "Fatigue",
    "Speech",
    "Saliva and Drooling",
    "Chewing and Swallowing",
    "Eating tasks",
    "Dressing",
    "Hygiene",
    "Handwriting",
    "Doing Hobbies and other activities",
    "Turning in bed",
    "Tremor",
    "Getting out of bed/car/deep chair",
    "Walking and balance",
    "Freezing",
    "Gender",
    "Age"};

constexpr std::array<std::string_view, 4> kSbrColumns = {"SBR_RC", "SBR_LC", "SBR_RP", "SBR_LP"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(const std::string& text) {
  auto v = parse_real(text);
  if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9) return std::nullopt;
  return static_cast<int>(*v);
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }
const std::array<std::string_view, kFeatureCount>& feature_titles() { return kTitles; }

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view label_name(Label l) { return l == Label::Normal ? "Normal" : "EarlyPD"; }

void FeatureVector::validate() const {
  for (std::size_t i = 0; i < kPqItemCount; ++i) {
    if (pq_items[i] < 0 || pq_items[i] > kMaxSeverity) {
      throw Error("range", std::string(kNames[i]) + ": severity " + std::to_string(pq_items[i]) +
                               " outside 0..4");
    }
  }
  if (!(age >= 0.0 && age <= 130.0)) {
    throw Error("range", "AGE: " + format_double(age) + " outside [0, 130]");
  }
  if (gender != 0 && gender != 1) {
    throw Error("range", "GENDER: code " + std::to_string(gender) + " is not 0 or 1");
  }
}

std::array<double, kFeatureCount> FeatureVector::as_reals() const {
  std::array<double, kFeatureCount> out{};
  for (std::size_t i = 0; i < kPqItemCount; ++i) out[i] = pq_items[i];
  out[kGenderIndex] = gender;
  out[kAgeIndex] = age;
  return out;
}

int FeatureVector::total_score() const {
  int total = 0;
  for (int v : pq_items) total += v;
  return total;
}

Cohort::Cohort(std::vector<Observation> observations) : observations_(std::move(observations)) {
  if (observations_.empty()) throw Error("empty", "cohort has no observations");
  std::unordered_map<std::string, std::pair<std::size_t, Label>> subjects;
  std::unordered_map<std::string, std::vector<int>> visits;
  subject_index_.reserve(observations_.size());
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& o = observations_[i];
    try {
      o.features.validate();
    } catch (const Error& e) {
      throw Error(e.code(), "observation " + std::to_string(i) + ": " + e.what());
    }
    if (o.visit_index < 0) {
      throw Error("range", "observation " + std::to_string(i) + ": negative visit index");
    }
    auto [it, inserted] = subjects.try_emplace(o.subject_id, subject_count_, o.label);
    if (inserted) {
      ++subject_count_;
    } else if (it->second.second != o.label) {
      throw Error("label_conflict", "subject " + o.subject_id + " carries both labels");
    }
    auto& seen = visits[o.subject_id];
    if (std::find(seen.begin(), seen.end(), o.visit_index) != seen.end()) {
      throw Error("duplicate", "duplicate (subject, visit) = (" + o.subject_id + ", " +
                                   std::to_string(o.visit_index) + ")");
    }
    seen.push_back(o.visit_index);
    subject_index_.push_back(it->second.first);
  }
}

std::size_t Cohort::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(observations_.begin(), observations_.end(),
                                                [&](const Observation& o) { return o.label == label; }));
}

bool Cohort::has_hy() const {
  return std::any_of(observations_.begin(), observations_.end(),
                     [](const Observation& o) { return o.hy_stage.has_value(); });
}

Matrix Cohort::feature_matrix() const {
  Matrix x(observations_.size(), kFeatureCount);
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto row = observations_[i].features.as_reals();
    for (std::size_t j = 0; j < kFeatureCount; ++j) x(i, j) = row[j];
  }
  return x;
}

std::vector<int> Cohort::labels() const {
  std::vector<int> y;
  y.reserve(observations_.size());
  for (const auto& o : observations_) y.push_back(to_int(o.label));
  return y;
}

Cohort Cohort::subset(std::span<const std::size_t> rows) const {
  std::vector<Observation> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(observations_.at(r));
  return Cohort(std::move(out));
}

std::optional<std::size_t> Cohort::find(std::string_view subject_id, int visit) const {
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    if (observations_[i].subject_id == subject_id && observations_[i].visit_index == visit) return i;
  }
  return std::nullopt;
}

std::string ColumnMapping::column_for(std::string_view canonical) const {
  auto it = renames.find(std::string(canonical));
  return it == renames.end() ? std::string(canonical) : it->second;
}

Cohort read_cohort(std::istream& in, const ColumnMapping& mapping) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw Error("schema", "missing header row");
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto locate = [&](std::string_view canonical) -> std::optional<std::size_t> {
    const std::string name = mapping.column_for(canonical);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto require = [&](std::string_view canonical) {
    auto c = locate(canonical);
    if (!c) throw Error("schema", "missing column " + mapping.column_for(canonical));
    return *c;
  };

  const std::size_t c_subject = require("SUBJECT_ID");
  const std::size_t c_visit = require("VISIT");
  const std::size_t c_label = require("LABEL");
  std::array<std::size_t, kFeatureCount> c_feat{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) c_feat[j] = require(kNames[j]);
  const auto c_hy = locate("HY");
  std::array<std::optional<std::size_t>, 4> c_sbr;
  for (std::size_t j = 0; j < 4; ++j) c_sbr[j] = locate(kSbrColumns[j]);
  const bool any_sbr = std::any_of(c_sbr.begin(), c_sbr.end(), [](auto& c) { return c.has_value(); });
  if (any_sbr) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (!c_sbr[j]) throw Error("schema", "SBR columns must all be present; missing " +
                                               mapping.column_for(kSbrColumns[j]));
    }
  }

  std::vector<Observation> rows;
  std::vector<std::string> problems;
  auto problem = [&](std::size_t ln, std::string_view column, const std::string& what) {
    if (problems.size() < 20) {
      problems.push_back("line " + std::to_string(ln) + ", column " + std::string(column) + ": " + what);
    } else if (problems.size() == 20) {
      problems.emplace_back("...");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      problem(line_no, "*", "expected " + std::to_string(header.size()) + " cells, found " +
                                std::to_string(cells.size()));
      continue;
    }
    const std::size_t before = problems.size();
    Observation o;
    o.subject_id = trim(cells[c_subject]);
    if (o.subject_id.empty()) problem(line_no, "SUBJECT_ID", "empty");
    if (auto v = parse_int(cells[c_visit]); v && *v >= 0) {
      o.visit_index = *v;
    } else {
      problem(line_no, mapping.column_for("VISIT"), "expected non-negative integer");
    }
    if (auto v = parse_int(cells[c_label]); v && (*v == 0 || *v == 1)) {
      o.label = static_cast<Label>(*v);
    } else {
      problem(line_no, mapping.column_for("LABEL"), "expected 0 or 1");
    }
    for (std::size_t j = 0; j < kPqItemCount; ++j) {
      auto v = parse_int(cells[c_feat[j]]);
      if (!v) {
        problem(line_no, mapping.column_for(kNames[j]), "expected integer severity");
      } else if (*v < 0 || *v > kMaxSeverity) {
        problem(line_no, mapping.column_for(kNames[j]), "severity " + std::to_string(*v) + " outside 0..4");
      } else {
        o.features.pq_items[j] = *v;
      }
    }
    if (auto v = parse_int(cells[c_feat[kGenderIndex]]); v && (*v == 0 || *v == 1)) {
      o.features.gender = *v;
    } else {
      problem(line_no, mapping.column_for("GENDER"), "expected 0 or 1");
    }
    if (auto v = parse_real(cells[c_feat[kAgeIndex]]); v && *v >= 0.0 && *v <= 130.0) {
      o.features.age = *v;
    } else {
      problem(line_no, mapping.column_for("AGE"), "expected age in [0, 130]");
    }
    if (c_hy && !trim(cells[*c_hy]).empty()) {
      if (auto v = parse_real(cells[*c_hy])) o.hy_stage = *v;
      else problem(line_no, mapping.column_for("HY"), "expected a number");
    }
    if (any_sbr) {
      std::array<double, 4> sbr{};
      std::size_t present = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        const auto& cell = cells[*c_sbr[j]];
        if (trim(cell).empty()) continue;
        if (auto v = parse_real(cell)) {
          sbr[j] = *v;
          ++present;
        } else {
          problem(line_no, mapping.column_for(kSbrColumns[j]), "expected a number");
        }
      }
      if (present == 4) o.sbr = sbr;
      else if (present != 0) problem(line_no, "SBR_*", "partially filled SBR values");
    }
    if (problems.size() == before) rows.push_back(std::move(o));
  }

  if (!problems.empty()) {
    std::string msg = "invalid rows: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    throw Error("range", msg);
  }
  return Cohort(std::move(rows));
}

Cohort load_cohort(const std::string& path, const ColumnMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  return read_cohort(in, mapping);
}

void write_cohort(std::ostream& out, const Cohort& cohort, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  const bool with_hy = cohort.has_hy();
  const bool with_sbr = std::any_of(cohort.observations().begin(), cohort.observations().end(),
                                    [](const Observation& o) { return o.sbr.has_value(); });
  out << "SUBJECT_ID,VISIT,LABEL";
  for (auto n : kNames) out << ',' << n;
  if (with_hy) out << ",HY";
  if (with_sbr) {
    for (auto n : kSbrColumns) out << ',' << n;
  }
  out << '\n';
  for (const auto& o : cohort.observations()) {
    out << quote_if_needed(o.subject_id) << ',' << o.visit_index << ',' << to_int(o.label);
    for (int v : o.features.pq_items) out << ',' << v;
    out << ',' << o.features.gender << ',' << format_double(o.features.age);
    if (with_hy) {
      out << ',';
      if (o.hy_stage) out << format_double(*o.hy_stage);
    }
    if (with_sbr) {
      for (std::size_t j = 0; j < 4; ++j) {
        out << ',';
        if (o.sbr) out << format_double((*o.sbr)[j]);
      }
    }
    out << '\n';
  }
}

void save_cohort(const std::string& path, const Cohort& cohort, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path);
  write_cohort(out, cohort, comment);
  if (!out) throw Error("io", "write failed for " + path);
}

SeverityHistogram severity_distribution(const Cohort& cohort, Label label) {
  if (cohort.count(label) == 0) {
    throw Error("class_absent", "no " + std::string(label_name(label)) + " observations");
  }
  SeverityHistogram h{};
  for (const auto& o : cohort.observations()) {
    if (o.label != label) continue;
    for (std::size_t j = 0; j < kPqItemCount; ++j) ++h[j][o.features.pq_items[j]];
  }
  return h;
}

SeverityHistogram severity_distribution(const Cohort& cohort, Label label,
                                        std::span<const std::size_t> rows) {
  SeverityHistogram h{};
  for (std::size_t r : rows) {
    const auto& o = cohort.observations().at(r);
    if (o.label != label) continue;
    for (std::size_t j = 0; j < kPqItemCount; ++j) ++h[j][o.features.pq_items[j]];
  }
  return h;
}

std::vector<FeatureValue> normal_behavior_gap(const Cohort& cohort) {
  const auto normal = severity_distribution(cohort, Label::Normal);
  const auto pd = severity_distribution(cohort, Label::EarlyPD);
  const double n0 = static_cast<double>(cohort.count(Label::Normal));
  const double n1 = static_cast<double>(cohort.count(Label::EarlyPD));
  std::vector<FeatureValue> out;
  out.reserve(kPqItemCount);
  for (std::size_t j = 0; j < kPqItemCount; ++j) {
    out.push_back({std::string(kNames[j]), 100.0 * normal[j][0] / n0 - 100.0 * pd[j][0] / n1});
  }
  return out;
}

}  // namespace pqscreen
