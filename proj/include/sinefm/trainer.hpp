#pragma once

// Desk-scale training loop (SGD-momentum or AdamW-style with cosine
// annealing), evaluation over a frozen model, and the transform-family
// ablation / hyperparameter sweep harnesses.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sinefm/data.hpp"
#include "sinefm/metrics.hpp"
#include "sinefm/network.hpp"

namespace sinefm {

enum class OptimAlgorithm { SgdMomentum, AdamW };

struct OptimConfig {
    OptimAlgorithm algorithm = OptimAlgorithm::AdamW;
    double lr = 6e-4; // annealed to zero on a cosine schedule
    double momentum = 0.9;
    double weight_decay = 1e-2; // AdamW decoupled decay
    int epochs = 20;
    int batch = 32;
    bool augment = true; // horizontal/vertical flips
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double metric = 0.0; // accuracy (classification) or mIoU (segmentation)
};

struct History {
    std::vector<EpochStats> epochs;
    std::string to_csv() const;
};

// Updates the model's learnable tensors in place. Transform specs are
// snapshotted and verified untouched after every epoch. Throws NumericError
// with epoch and per-layer norms if the loss goes non-finite.
template <typename T>
History train(Model<T>& model, const Dataset<T>& data, const OptimConfig& config,
              std::uint64_t seed, std::ostream* log = nullptr);

struct EvalResult {
    Metrics metrics;
    ConfusionMatrix confusion{1};
    double accuracy = 0.0; // == metrics.oa
};

template <typename T>
EvalResult evaluate(const Model<T>& model, const Dataset<T>& data, int threads = 1,
                    int batch = 64);

struct AblationRow {
    std::string family;
    int trial = 0;
    double metric = 0.0;
};

struct AblationTable {
    std::vector<AblationRow> rows;
    // Per-family mean and sample std (0 for a single trial).
    std::vector<AblationRow> summary; // trial = -1, metric = mean; paired std rows
    std::string to_csv() const;
};

template <typename T>
AblationTable ablate_families(const ArchDescriptor& base, const std::vector<TransformFamily>& families,
                              const DatasetSpec& data, const OptimConfig& optim, int trials,
                              std::uint64_t seed, std::ostream* log = nullptr);

enum class SweepAxis { OmegaBounds, PsiBounds, Fanout, SeedChannels };

SweepAxis sweep_axis_from_name(const std::string& name);

struct SweepPoint {
    std::string value; // printed axis value ("5" or "1:2")
    double metric = 0.0;
    std::int64_t params = 0;
};

struct SweepCurve {
    std::vector<SweepPoint> points;
    std::string axis;
    std::string to_csv() const;
};

// values: numeric for fanout / c_s axes, "lo:hi" pairs for bound axes.
template <typename T>
SweepCurve sweep_hyperparams(SweepAxis axis, const std::vector<std::string>& values,
                             const ArchDescriptor& base, const DatasetSpec& data,
                             const OptimConfig& optim, std::uint64_t seed,
                             std::ostream* log = nullptr);

} // namespace sinefm
