#pragma once

// The SineFM layer: a small learnable seed convolution, fixed seeded
// nonlinear transforms fanning the seed maps out, per-map response
// normalization, and a learnable 1x1 combination. The layer emits
// pre-activation values; networks apply their own activation.

#include <cstdint>
#include <utility>
#include <vector>

#include "sinefm/ops.hpp"
#include "sinefm/rng.hpp"
#include "sinefm/tensor.hpp"
#include "sinefm/transforms.hpp"

namespace sinefm {

struct SineFMConfig {
    int c_in = 0;
    int c_out = 0;
    int c_s = 0; // seed channels, 1 <= c_s <= c_out
    int kernel = 3;
    int stride = 1;
    int padding = 1;
    int fanout = 5; // transform instances per seed channel
    TransformFamily family = TransformFamily::Sinusoidal;
    std::uint64_t seed = 0;
    TransformBounds bounds;
    bool operator==(const SineFMConfig&) const = default;
};

struct ChannelPlan {
    int c_g = 0;         // generated channels before combination
    int combine_in = 0;  // k * c_s
    int combine_out = 0; // c_out - c_s
    bool operator==(const ChannelPlan&) const = default;
};

// c_g = c_s * (ceil(c_out / c_s) - 1); combine_out = c_out - c_s.
ChannelPlan channel_plan(int c_out, int c_s, int k);

// Generated channel j sources seed channel j mod c_s (round-robin).
std::vector<std::pair<int, int>> transform_channel_assignment(const ChannelPlan& plan, int c_s);

// Subtract the spatial mean per (sample, channel) map and divide by the
// L2 norm of the centered map plus eps.
template <typename T>
TensorPtr<T> normalize_maps(ComputationRecord<T>* rec, const TensorPtr<T>& y, double eps = 1e-5);

// Apply spec channel j to seed channel j mod c_s, j in [0, k*c_s).
template <typename T>
TensorPtr<T> generate_maps(ComputationRecord<T>* rec, const TensorPtr<T>& seed_maps,
                           const TransformSpec& spec);

template <typename T>
struct SineFMLayer {
    SineFMConfig config;
    TensorPtr<T> seed_filters; // [c_s, c_in, K, K], learnable
    TensorPtr<T> combine;      // [c_out - c_s, k*c_s, 1, 1], learnable; null when degenerate
    TransformSpec transform;   // k*c_s channels, fixed, rebuilt from config.seed

    static SineFMLayer<T> make(const SineFMConfig& config, Xoshiro256ss& init_rng);

    TensorPtr<T> forward(ComputationRecord<T>* rec, const TensorPtr<T>& x) const;
};

struct AlphaFit {
    std::vector<double> alpha;
    double residual = 0.0;
    bool degenerate = false; // all-zero response matrix against nonzero targets
};

// Least-squares fit of the 1x1 combination weights that approximate a
// standard conv filter's relu responses from transformed seed responses,
// solved by ridge-regularized normal equations (lambda = 1e-8).
AlphaFit fit_alpha(const Tensor<double>& seed_filter, const TransformSpec& spec,
                   const Tensor<double>& target_filter, const Tensor<double>& patches);

} // namespace sinefm
