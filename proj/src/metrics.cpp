#include "sinefm/metrics.hpp"

#include <sstream>

namespace sinefm {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t sum = 0;
    for (const auto v : counts) sum += v;
    return sum;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
        counts[i] += other.counts[i];
    }
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
    Metrics m;
    const int k = cm.classes;
    m.iou.assign(k, 0.0);
    m.f1.assign(k, 0.0);
    m.excluded.assign(k, false);

    std::int64_t trace = 0;
    double iou_sum = 0.0, f1_sum = 0.0;
    int included = 0;
    for (int c = 0; c < k; ++c) {
        const std::int64_t tp = cm.at(c, c);
        std::int64_t fp = 0, fn = 0;
        for (int other = 0; other < k; ++other) {
            if (other == c) continue;
            fp += cm.at(other, c);
            fn += cm.at(c, other);
        }
        trace += tp;
        if (tp + fp + fn == 0) {
            // Absent from both truth and prediction: 0/0, excluded from means.
            m.excluded[c] = true;
            continue;
        }
        m.iou[c] = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
        m.f1[c] = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
        iou_sum += m.iou[c];
        f1_sum += m.f1[c];
        ++included;
    }
    const std::int64_t total = cm.total();
    m.oa = total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : 0.0;
    m.miou = included > 0 ? iou_sum / included : 0.0;
    m.mean_f1 = included > 0 ? f1_sum / included : 0.0;
    return m;
}

std::string metrics_to_string(const Metrics& m) {
    std::ostringstream out;
    out << "OA=" << m.oa << " mIoU=" << m.miou << " meanF1=" << m.mean_f1;
    bool any_excluded = false;
    for (std::size_t c = 0; c < m.excluded.size(); ++c) {
        if (m.excluded[c]) {
            out << (any_excluded ? "," : " (excluded absent classes: ") << c;
            any_excluded = true;
        }
    }
    if (any_excluded) out << ")";
    return out.str();
}

} // namespace sinefm
