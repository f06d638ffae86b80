#include "sinefm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "sinefm/cost.hpp"
#include "sinefm/ops.hpp"
#include "sinefm/rng.hpp"

namespace sinefm {

namespace {

double cosine_lr(double lr0, int epoch, int total) {
    return lr0 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * epoch / total));
}

template <typename T>
class Optimizer {
public:
    Optimizer(const OptimConfig& config, const std::vector<TensorPtr<T>>& params)
        : config_(config), params_(params) {
        slot_a_.resize(params.size());
        slot_b_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            slot_a_[i].assign(params[i]->data.size(), 0.0);
            if (config.algorithm == OptimAlgorithm::AdamW) {
                slot_b_[i].assign(params[i]->data.size(), 0.0);
            }
        }
    }

    void step(double lr) {
        ++t_;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor<T>& p = *params_[i];
            if (!p.has_grad()) continue;
            if (config_.algorithm == OptimAlgorithm::SgdMomentum) {
                for (std::size_t j = 0; j < p.data.size(); ++j) {
                    slot_a_[i][j] = config_.momentum * slot_a_[i][j] +
                                    static_cast<double>(p.grad[j]);
                    p.data[j] -= static_cast<T>(lr * slot_a_[i][j]);
                }
            } else {
                const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                const double bc1 = 1.0 - std::pow(b1, t_);
                const double bc2 = 1.0 - std::pow(b2, t_);
                for (std::size_t j = 0; j < p.data.size(); ++j) {
                    const double g = static_cast<double>(p.grad[j]);
                    slot_a_[i][j] = b1 * slot_a_[i][j] + (1.0 - b1) * g;
                    slot_b_[i][j] = b2 * slot_b_[i][j] + (1.0 - b2) * g * g;
                    const double mhat = slot_a_[i][j] / bc1;
                    const double vhat = slot_b_[i][j] / bc2;
                    // Decoupled weight decay.
                    p.data[j] -= static_cast<T>(lr * (mhat / (std::sqrt(vhat) + eps) +
                                                      config_.weight_decay *
                                                          static_cast<double>(p.data[j])));
                }
            }
        }
    }

private:
    OptimConfig config_;
    std::vector<TensorPtr<T>> params_;
    std::vector<std::vector<double>> slot_a_; // momentum / first moment
    std::vector<std::vector<double>> slot_b_; // second moment (AdamW)
    int t_ = 0;
};

template <typename T>
std::vector<TransformSpec> snapshot_transforms(const Model<T>& model) {
    std::vector<TransformSpec> specs;
    for (const auto& rt : model.layers) {
        if (rt.transform) specs.push_back(*rt.transform);
    }
    return specs;
}

template <typename T>
void check_transforms_untouched(const Model<T>& model, const std::vector<TransformSpec>& before,
                                int epoch) {
    const auto after = snapshot_transforms(model);
    if (!(after == before)) {
        throw StateError("transform specs mutated during training at epoch " +
                         std::to_string(epoch));
    }
}

template <typename T>
std::string layer_norms(const Model<T>& model) {
    std::ostringstream out;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        for (const auto& p : model.layers[i].params) {
            double sq = 0.0;
            for (const T v : p->data) sq += static_cast<double>(v) * static_cast<double>(v);
            out << " layer" << i << "=" << std::sqrt(sq);
        }
    }
    return out.str();
}

// Accumulates argmax predictions against labels.
template <typename T>
void accumulate_confusion(const Tensor<T>& logits, const std::vector<std::int32_t>& labels,
                          ConfusionMatrix& cm) {
    const int classes = logits.shape.c;
    const int hw = logits.shape.h * logits.shape.w;
    for (int n = 0; n < logits.shape.n; ++n) {
        for (int p = 0; p < hw; ++p) {
            const int y = p / logits.shape.w;
            const int x = p % logits.shape.w;
            int best = 0;
            T bv = logits.at(n, 0, y, x);
            for (int c = 1; c < classes; ++c) {
                const T v = logits.at(n, c, y, x);
                if (v > bv) {
                    bv = v;
                    best = c;
                }
            }
            cm.add(labels[static_cast<std::size_t>(n) * hw + p], best);
        }
    }
}

} // namespace

std::string History::to_csv() const {
    std::ostringstream out;
    out << "epoch,lr,loss,metric\n";
    for (const auto& e : epochs) {
        out << e.epoch << "," << e.lr << "," << e.loss << "," << e.metric << "\n";
    }
    return out.str();
}

template <typename T>
History train(Model<T>& model, const Dataset<T>& data, const OptimConfig& config,
              std::uint64_t seed, std::ostream* log) {
    if (config.lr <= 0.0) throw ArgumentError("learning rate must be positive");
    if (config.epochs < 0) throw ArgumentError("epochs must be nonnegative");
    if (config.batch < 1) throw ArgumentError("batch size must be >= 1");

    History history;
    if (config.epochs == 0 || data.count() == 0) return history;

    const auto params = model.parameters();
    for (const auto& p : params) p->requires_grad = true;
    Optimizer<T> optimizer(config, params);
    const auto transforms_before = snapshot_transforms(model);

    std::vector<int> order(data.count());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = cosine_lr(config.lr, epoch, config.epochs);
        Xoshiro256ss shuffle_rng(substream(seed, static_cast<std::uint64_t>(epoch)));
        for (int i = data.count() - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        int batches = 0;
        ConfusionMatrix cm(data.classes);
        for (int start = 0; start < data.count(); start += config.batch) {
            const int end = std::min(start + config.batch, data.count());
            std::vector<int> indices(order.begin() + start, order.begin() + end);
            const std::uint64_t flip_seed =
                substream(seed, 0x10000u + static_cast<std::uint64_t>(epoch) * 4096 +
                                    static_cast<std::uint64_t>(batches));
            Batch<T> batch = make_batch(data, indices, flip_seed, config.augment);

            ComputationRecord<T> rec;
            auto logits = model.forward(&rec, batch.images);
            auto loss = softmax_cross_entropy(&rec, logits, batch.labels);
            const double loss_value = static_cast<double>(loss->data[0]);
            if (!std::isfinite(loss_value)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches) + "; parameter norms:" +
                                   layer_norms(model));
            }
            for (const auto& p : params) p->zero_grad();
            rec.backward(loss);
            optimizer.step(lr);

            loss_sum += loss_value;
            ++batches;
            accumulate_confusion(*logits, batch.labels, cm);
        }
        check_transforms_untouched(model, transforms_before, epoch);

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.loss = loss_sum / batches;
        const Metrics m = compute_metrics(cm);
        stats.metric = data.segmentation ? m.miou : m.oa;
        history.epochs.push_back(stats);
        if (log) {
            (*log) << "epoch " << epoch << " lr " << lr << " loss " << stats.loss << " "
                   << (data.segmentation ? "miou " : "acc ") << stats.metric << "\n";
        }
    }
    for (const auto& p : params) p->requires_grad = false;
    return history;
}

template <typename T>
EvalResult evaluate(const Model<T>& model, const Dataset<T>& data, int threads, int batch) {
    EvalResult result;
    result.confusion = ConfusionMatrix(data.classes);
    if (data.count() == 0) return result;
    threads = std::max(1, std::min(threads, data.count()));

    auto eval_range = [&model, &data, batch](int first, int last, ConfusionMatrix& cm) {
        for (int start = first; start < last; start += batch) {
            const int end = std::min(start + batch, last);
            std::vector<int> indices(end - start);
            std::iota(indices.begin(), indices.end(), start);
            Batch<T> b = make_batch(data, indices);
            auto logits = predict(model, b.images);
            accumulate_confusion(*logits, b.labels, cm);
        }
    };

    if (threads == 1) {
        eval_range(0, data.count(), result.confusion);
    } else {
        std::vector<ConfusionMatrix> partial(threads, ConfusionMatrix(data.classes));
        std::vector<std::thread> pool;
        const int per = (data.count() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int first = t * per;
            const int last = std::min(first + per, data.count());
            if (first >= last) break;
            pool.emplace_back([&eval_range, &partial, t, first, last]() {
                eval_range(first, last, partial[t]);
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& cm : partial) result.confusion.merge(cm);
    }
    result.metrics = compute_metrics(result.confusion);
    result.accuracy = result.metrics.oa;
    return result;
}

std::string AblationTable::to_csv() const {
    std::ostringstream out;
    out << "family,trial,metric\n";
    for (const auto& row : rows) {
        out << row.family << "," << row.trial << "," << row.metric << "\n";
    }
    for (std::size_t i = 0; i + 1 < summary.size(); i += 2) {
        out << summary[i].family << ",mean," << summary[i].metric << "\n";
        out << summary[i + 1].family << ",std," << summary[i + 1].metric << "\n";
    }
    return out.str();
}

template <typename T>
AblationTable ablate_families(const ArchDescriptor& base, const std::vector<TransformFamily>& families,
                              const DatasetSpec& data, const OptimConfig& optim, int trials,
                              std::uint64_t seed, std::ostream* log) {
    if (trials < 1) throw ArgumentError("ablate_families requires trials >= 1");
    const DatasetPair<T> split = make_dataset<T>(data);
    AblationTable table;
    for (std::size_t f = 0; f < families.size(); ++f) {
        const TransformFamily family = families[f];
        double sum = 0.0, sumsq = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t trial_seed =
                substream(substream(seed, f), static_cast<std::uint64_t>(trial));
            ArchDescriptor converted = convert_to_sinefm(base, 16, 5, family, trial_seed);
            Model<T> model = build<T>(converted, substream(trial_seed, 1));
            train(model, split.train, optim, substream(trial_seed, 2), nullptr);
            const EvalResult eval = evaluate(model, split.test);
            const double metric = split.test.segmentation ? eval.metrics.miou : eval.accuracy;
            table.rows.push_back({family_name(family), trial, metric});
            sum += metric;
            sumsq += metric * metric;
            if (log) {
                (*log) << family_name(family) << " trial " << trial << " metric " << metric
                       << "\n";
            }
        }
        const double mean = sum / trials;
        const double var = trials > 1 ? std::max(0.0, (sumsq - trials * mean * mean) / (trials - 1))
                                      : 0.0;
        table.summary.push_back({family_name(family), -1, mean});
        table.summary.push_back({family_name(family), -1, std::sqrt(var)});
    }
    return table;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
    if (name == "omega_bounds") return SweepAxis::OmegaBounds;
    if (name == "psi_bounds") return SweepAxis::PsiBounds;
    if (name == "fanout") return SweepAxis::Fanout;
    if (name == "c_s" || name == "cs") return SweepAxis::SeedChannels;
    throw ArgumentError("unknown sweep axis '" + name + "'");
}

std::string SweepCurve::to_csv() const {
    std::ostringstream out;
    out << "axis,value,metric,params\n";
    for (const auto& p : points) {
        out << axis << "," << p.value << "," << p.metric << "," << p.params << "\n";
    }
    return out.str();
}

template <typename T>
SweepCurve sweep_hyperparams(SweepAxis axis, const std::vector<std::string>& values,
                             const ArchDescriptor& base, const DatasetSpec& data,
                             const OptimConfig& optim, std::uint64_t seed, std::ostream* log) {
    if (values.empty()) throw ArgumentError("sweep requires at least one value");
    const DatasetPair<T> split = make_dataset<T>(data);
    SweepCurve curve;
    switch (axis) {
    case SweepAxis::OmegaBounds: curve.axis = "omega_bounds"; break;
    case SweepAxis::PsiBounds: curve.axis = "psi_bounds"; break;
    case SweepAxis::Fanout: curve.axis = "fanout"; break;
    case SweepAxis::SeedChannels: curve.axis = "c_s"; break;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string& value = values[i];
        int c_s = 16, fanout = 5;
        TransformBounds bounds;
        if (axis == SweepAxis::Fanout || axis == SweepAxis::SeedChannels) {
            int v = 0;
            try {
                v = std::stoi(value);
            } catch (const std::exception&) {
                throw ArgumentError("sweep value '" + value + "' is not an integer");
            }
            (axis == SweepAxis::Fanout ? fanout : c_s) = v;
        } else {
            const auto colon = value.find(':');
            if (colon == std::string::npos) {
                throw ArgumentError("bounds sweep value must be 'lo:hi', got '" + value + "'");
            }
            Bounds b{std::stod(value.substr(0, colon)), std::stod(value.substr(colon + 1))};
            (axis == SweepAxis::OmegaBounds ? bounds.omega : bounds.psi) = b;
        }
        const std::uint64_t point_seed = substream(seed, i);
        ArchDescriptor converted = convert_to_sinefm(base, c_s, fanout,
                                                     TransformFamily::Sinusoidal, point_seed,
                                                     bounds);
        Model<T> model = build<T>(converted, substream(point_seed, 1));
        train(model, split.train, optim, substream(point_seed, 2), nullptr);
        const EvalResult eval = evaluate(model, split.test);
        SweepPoint point;
        point.value = value;
        point.metric = split.test.segmentation ? eval.metrics.miou : eval.accuracy;
        point.params = model_cost(converted, base.h, base.w).total_params;
        curve.points.push_back(point);
        if (log) {
            (*log) << curve.axis << "=" << value << " metric " << point.metric << " params "
                   << point.params << "\n";
        }
    }
    return curve;
}

#define SINEFM_INSTANTIATE_TRAINER(T)                                                            \
    template History train<T>(Model<T>&, const Dataset<T>&, const OptimConfig&, std::uint64_t,   \
                              std::ostream*);                                                    \
    template EvalResult evaluate<T>(const Model<T>&, const Dataset<T>&, int, int);               \
    template AblationTable ablate_families<T>(const ArchDescriptor&,                             \
                                              const std::vector<TransformFamily>&,               \
                                              const DatasetSpec&, const OptimConfig&, int,       \
                                              std::uint64_t, std::ostream*);                     \
    template SweepCurve sweep_hyperparams<T>(SweepAxis, const std::vector<std::string>&,         \
                                             const ArchDescriptor&, const DatasetSpec&,          \
                                             const OptimConfig&, std::uint64_t, std::ostream*);

SINEFM_INSTANTIATE_TRAINER(float)
SINEFM_INSTANTIATE_TRAINER(double)

#undef SINEFM_INSTANTIATE_TRAINER

} // namespace sinefm
