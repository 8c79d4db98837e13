#include "radssl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace radssl {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("metrics: predictions and labels differ in length");
    if (a.size() < 2) throw std::invalid_argument("metrics: need at least 2 predictions");
}

Stat summarize(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    Stat s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        std::vector<double> sq;
        sq.reserve(values.size());
        for (double v : values) sq.push_back((v - s.mean) * (v - s.mean));
        std::sort(sq.begin(), sq.end());
        double acc = 0.0;
        for (double v : sq) acc += v;
        s.sd = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
    check_lengths(scores, labels);
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] > 0.5 ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty()) throw std::invalid_argument("metrics: AUC needs both classes");
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

MetricsReport evaluate(std::span<const double> preds, std::span<const double> labels, Task task) {
    check_lengths(preds, labels);
    MetricsReport r;
    r.task = task;
    if (task == Task::classification) {
        double tp = 0, fn = 0, tn = 0, fp = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (labels[i] != 0.0 && labels[i] != 1.0) throw std::invalid_argument("metrics: class labels must be 0 or 1");
            const bool predicted = preds[i] >= 0.5;
            if (labels[i] == 1.0)
                (predicted ? tp : fn) += 1;
            else
                (predicted ? fp : tn) += 1;
        }
        if (tp + fn == 0 || tn + fp == 0) throw std::invalid_argument("metrics: single-class label vector");
        r.sen.mean = tp / (tp + fn);
        r.spe.mean = tn / (tn + fp);
        r.ba.mean = 0.5 * (r.sen.mean + r.spe.mean);
        r.auc.mean = roc_auc(preds, labels);
    } else {
        double abs_err = 0.0;
        double ss_res = 0.0;
        double mean = 0.0;
        for (double y : labels) mean += y;
        mean /= static_cast<double>(labels.size());
        double ss_tot = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            abs_err += std::abs(preds[i] - labels[i]);
            ss_res += (preds[i] - labels[i]) * (preds[i] - labels[i]);
            ss_tot += (labels[i] - mean) * (labels[i] - mean);
        }
        r.mae.mean = abs_err / static_cast<double>(preds.size());
        // Constant targets: R^2 is 1 for an exact fit and 0 otherwise.
        r.r2.mean = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    }
    return r;
}

MetricsReport aggregate(std::span<const MetricsReport> runs) {
    if (runs.empty()) throw std::invalid_argument("metrics: nothing to aggregate");
    MetricsReport out;
    out.task = runs.front().task;
    out.runs = static_cast<int>(runs.size());
    auto collect = [&](Stat MetricsReport::*field) {
        std::vector<double> v;
        v.reserve(runs.size());
        for (const auto& r : runs) v.push_back((r.*field).mean);
        return summarize(std::move(v));
    };
    if (out.task == Task::classification) {
        out.ba = collect(&MetricsReport::ba);
        out.sen = collect(&MetricsReport::sen);
        out.spe = collect(&MetricsReport::spe);
        out.auc = collect(&MetricsReport::auc);
    } else {
        out.mae = collect(&MetricsReport::mae);
        out.r2 = collect(&MetricsReport::r2);
    }
    return out;
}

}  // namespace radssl
