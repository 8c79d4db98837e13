#pragma once

// Classification and regression metrics, with mean/SD aggregation over runs.

#include "radssl/encoder.hpp"

#include <span>

namespace radssl {

struct Stat {
    double mean = 0.0;
    double sd = 0.0;
};

struct MetricsReport {
    Task task = Task::classification;
    int runs = 1;
    // classification
    Stat ba, sen, spe, auc;
    // regression
    Stat mae, r2;
};

// Pairwise rank statistic: fraction of (positive, negative) pairs ordered
// correctly, ties counting one half. Throws on a single-class label vector.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

// Classification: `preds` are class-1 probabilities, thresholded at 0.5 for
// SEN/SPE; labels in {0, 1}. Regression: raw predictions and targets.
MetricsReport evaluate(std::span<const double> preds, std::span<const double> labels, Task task);

// Mean and sample SD of each metric; values are sorted before summation so
// the result does not depend on run order.
MetricsReport aggregate(std::span<const MetricsReport> runs);

}  // namespace radssl
