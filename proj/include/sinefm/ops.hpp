#pragma once

// Differentiable tensor operations. Every op takes an optional
// ComputationRecord; passing nullptr runs pure inference. Backward rules are
// pushed as closures and replayed in reverse by ComputationRecord::backward.

#include <cstdint>
#include <vector>

#include "sinefm/tensor.hpp"

namespace sinefm {

// No bias term; output H' = floor((H + 2*pad - K) / stride) + 1.
template <typename T>
TensorPtr<T> conv2d(ComputationRecord<T>* rec, const TensorPtr<T>& input,
                    const TensorPtr<T>& weights, int stride, int padding);

template <typename T>
TensorPtr<T> relu(ComputationRecord<T>* rec, const TensorPtr<T>& x);

template <typename T>
TensorPtr<T> add(ComputationRecord<T>* rec, const TensorPtr<T>& a, const TensorPtr<T>& b);

template <typename T>
TensorPtr<T> mul(ComputationRecord<T>* rec, const TensorPtr<T>& a, const TensorPtr<T>& b);

template <typename T>
TensorPtr<T> scale(ComputationRecord<T>* rec, const TensorPtr<T>& x, T factor);

template <typename T>
TensorPtr<T> concat_channels(ComputationRecord<T>* rec, const TensorPtr<T>& a,
                             const TensorPtr<T>& b);

// bias shape [1, C, 1, 1], broadcast over batch and space.
template <typename T>
TensorPtr<T> bias_add(ComputationRecord<T>* rec, const TensorPtr<T>& x, const TensorPtr<T>& bias);

// 2x2 window, stride 2, floor semantics on odd extents.
template <typename T>
TensorPtr<T> maxpool2(ComputationRecord<T>* rec, const TensorPtr<T>& x);

template <typename T>
TensorPtr<T> upsample_nearest2(ComputationRecord<T>* rec, const TensorPtr<T>& x);

template <typename T>
TensorPtr<T> global_avg_pool(ComputationRecord<T>* rec, const TensorPtr<T>& x);

template <typename T>
TensorPtr<T> sum_all(ComputationRecord<T>* rec, const TensorPtr<T>& x);

// Mean softmax cross-entropy over all (n, h, w) positions; labels indexed
// n*H*W + h*W + w. Fused for numerical stability.
template <typename T>
TensorPtr<T> softmax_cross_entropy(ComputationRecord<T>* rec, const TensorPtr<T>& logits,
                                   const std::vector<std::int32_t>& labels);

} // namespace sinefm
