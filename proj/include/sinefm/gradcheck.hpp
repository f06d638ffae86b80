#pragma once

// Central-finite-difference validation of analytic gradients. Always runs
// in 64-bit. Elements whose perturbation flips a relu input across the
// 1e-6 dead zone are excluded from the max (kink exclusion).

#include <cstdint>
#include <functional>
#include <vector>

#include "sinefm/tensor.hpp"
#include "sinefm/transforms.hpp"

namespace sinefm {

using ForwardFn = std::function<TensorPtr<double>(ComputationRecord<double>&)>;

// Returns max over parameter elements of
// |analytic - central_difference| / max(|analytic|, |central_difference|, 1e-8).
// Throws Error subtypes if forward_fn is non-deterministic.
double grad_check(const ForwardFn& forward_fn, const std::vector<TensorPtr<double>>& params,
                  double eps = 1e-5);

// Finite-difference suite for one SineFM layer (c_in=3, c_s=2, c_out=8,
// k=3, K=3, input 2x3x8x8) with respect to seed filters and combination
// weights. Loss is the sum of the layer output.
double grad_check_layer(TransformFamily family, std::uint64_t seed = 7);

} // namespace sinefm
