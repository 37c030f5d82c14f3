#include "pqscreen/folds.hpp"

#include <algorithm>
#include <numeric>

namespace pqscreen {

std::string_view scheme_name(Scheme s) { return s == Scheme::SubjectWise ? "subject" : "record"; }

Scheme parse_scheme(std::string_view text) {
  if (text == "subject" || text == "subject_wise" || text == "subject-wise") return Scheme::SubjectWise;
  if (text == "record" || text == "record_wise" || text == "record-wise") return Scheme::RecordWise;
  throw Error("invalid_argument", "unknown scheme '" + std::string(text) + "' (expected subject or record)");
}

std::vector<std::size_t> stratified_assignment(std::span<const int> unit_labels, std::size_t k,
                                               std::uint64_t seed) {
  if (k < 2) throw Error("invalid_argument", "k must be at least 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < unit_labels.size(); ++i) {
    if (unit_labels[i] != 0 && unit_labels[i] != 1) throw Error("invalid_argument", "labels must be 0 or 1");
    by_class[unit_labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw Error("fold_plan", "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                   " units, fewer than k = " + std::to_string(k));
    }
  }
  Rng rng(seed);
  // A random fold relabelling decides which folds receive the extra units.
  std::vector<std::size_t> relabel(k);
  std::iota(relabel.begin(), relabel.end(), 0);
  rng.shuffle(std::span<std::size_t>(relabel));
  std::vector<std::size_t> assignment(unit_labels.size());
  std::size_t cursor = 0;
  for (int c = 0; c < 2; ++c) {
    auto units = by_class[c];
    rng.shuffle(std::span<std::size_t>(units));
    for (std::size_t u : units) {
      assignment[u] = relabel[cursor % k];
      ++cursor;
    }
  }
  return assignment;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f == fold) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t FoldPlan::observation_count() const {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.size();
  return n;
}

FoldPlan make_fold_plan(std::span<const int> labels, std::span<const std::size_t> unit_of, Scheme scheme,
                        std::size_t k, std::uint64_t seed) {
  if (labels.size() != unit_of.size()) throw Error("dimension", "labels and unit ids differ in length");
  FoldPlan plan;
  plan.scheme = scheme;
  plan.seed = seed;
  plan.folds.assign(k, {});
  if (scheme == Scheme::RecordWise) {
    const auto assignment = stratified_assignment(labels, k, seed);
    for (std::size_t i = 0; i < labels.size(); ++i) plan.folds[assignment[i]].push_back(i);
    return plan;
  }
  std::size_t units = 0;
  for (std::size_t u : unit_of) units = std::max(units, u + 1);
  std::vector<int> unit_label(units, -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int& l = unit_label[unit_of[i]];
    if (l == -1) l = labels[i];
    else if (l != labels[i]) throw Error("label_conflict", "a subject carries both labels");
  }
  // Compact away unit numbers that do not occur in this subset.
  std::vector<std::size_t> dense(units, SIZE_MAX);
  std::vector<int> present_labels;
  for (std::size_t u = 0; u < units; ++u) {
    if (unit_label[u] == -1) continue;
    dense[u] = present_labels.size();
    present_labels.push_back(unit_label[u]);
  }
  const auto assignment = stratified_assignment(present_labels, k, seed);
  for (std::size_t i = 0; i < labels.size(); ++i) plan.folds[assignment[dense[unit_of[i]]]].push_back(i);
  return plan;
}

FoldPlan make_fold_plan(const Cohort& cohort, Scheme scheme, std::size_t k, std::uint64_t seed) {
  const auto labels = cohort.labels();
  return make_fold_plan(labels, cohort.subject_index(), scheme, k, seed);
}

}  // namespace pqscreen
