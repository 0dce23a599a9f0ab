#pragma once

#include <vector>

namespace lemda {

// Rank-statistic (Mann-Whitney) ROC-AUC for binary labels {0,1}; ties get
// average ranks. Returns NaN when either class is absent.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);

}  // namespace lemda
