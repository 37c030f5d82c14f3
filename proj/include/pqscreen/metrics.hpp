#pragma once

#include <cstddef>
#include <span>

namespace pqscreen {

/// Area under the ROC curve: (concordant + 0.5 tied) positive/negative
/// pairs over n1 * n0, computed from mid-ranks.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  double accuracy = 0.0;
  double sensitivity = 0.0;  // PD positive
  double specificity = 0.0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// score >= threshold predicts PD.
Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold);

}  // namespace pqscreen
