#pragma once

// Confusion-matrix based evaluation metrics: mean IoU, overall accuracy,
// mean F1. Classes absent from both truth and prediction are excluded from
// the means (0/0 convention).

#include <cstdint>
#include <string>
#include <vector>

namespace sinefm {

struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::int64_t> counts; // rows = ground truth, cols = prediction

    explicit ConfusionMatrix(int num_classes)
        : classes(num_classes), counts(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

    void add(int truth, int pred) {
        counts[static_cast<std::size_t>(truth) * classes + pred] += 1;
    }
    std::int64_t at(int truth, int pred) const {
        return counts[static_cast<std::size_t>(truth) * classes + pred];
    }
    std::int64_t total() const;
    void merge(const ConfusionMatrix& other);
};

struct Metrics {
    double oa = 0.0;      // trace / total
    double miou = 0.0;    // mean per-class TP / (TP + FP + FN)
    double mean_f1 = 0.0; // mean per-class 2TP / (2TP + FP + FN)
    std::vector<double> iou;
    std::vector<double> f1;
    std::vector<bool> excluded; // class absent in both truth and prediction
};

Metrics compute_metrics(const ConfusionMatrix& cm);

std::string metrics_to_string(const Metrics& m);

} // namespace sinefm
