#include "pqscreen/metrics.hpp"

#include "pqscreen/common.hpp"
#include "pqscreen/stats.hpp"

#include <cmath>

namespace pqscreen {

namespace {

void check(std::span<const double> scores, std::span<const int> labels, std::size_t& n1, std::size_t& n0) {
  if (scores.size() != labels.size()) throw Error("dimension", "score/label count mismatch");
  n1 = n0 = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) ++n1;
    else if (labels[i] == 0) ++n0;
    else throw Error("invalid_argument", "labels must be 0 or 1");
    if (std::isnan(scores[i])) throw Error("invalid_argument", "score is NaN");
  }
  if (n1 == 0 || n0 == 0) throw Error("single_class", "metrics need both classes");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n1 = 0, n0 = 0;
  check(scores, labels, n1, n0);
  const auto ranks = stats::midranks(scores);
  // Mid-ranks are multiples of 0.5, so these sums are exact.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  std::size_t n1 = 0, n0 = 0;
  check(scores, labels, n1, n0);
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pd = scores[i] >= threshold;
    if (labels[i] == 1) (pd ? c.tp : c.fn)++;
    else (pd ? c.fp : c.tn)++;
  }
  c.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(labels.size());
  c.sensitivity = static_cast<double>(c.tp) / static_cast<double>(n1);
  c.specificity = static_cast<double>(c.tn) / static_cast<double>(n0);
  return c;
}

}  // namespace pqscreen
