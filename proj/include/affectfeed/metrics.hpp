#pragma once

#include <optional>
#include <span>

namespace affectfeed {

// Area under the ROC curve with tied scores sharing their average rank.
// Empty when the labels contain a single class.
std::optional<double> auc_roc(std::span<const double> scores, std::span<const bool> labels);

// Binary cross-entropy of a logit, computed without overflow.
double bce_with_logit(double logit, bool label);

double sigmoid(double x);

}  // namespace affectfeed
