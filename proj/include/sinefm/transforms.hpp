#pragma once

// The nine nonlinear feature-generating function families and the seeded
// sampling of their per-channel hyperparameters. Sampling is a pure function
// of (seed, family, count, bounds); re-sampling with the stored seed
// reproduces the parameters bit-exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sinefm/tensor.hpp"

namespace sinefm {

enum class TransformFamily : std::uint8_t {
    Monomial = 0,
    ChebyshevPoly = 1,
    HermitePoly = 2,
    LegendrePoly = 3,
    GaussianRBF = 4,
    MultiquadraticRBF = 5,
    InverseQuadraticRBF = 6,
    InverseMultiquadraticRBF = 7,
    Sinusoidal = 8,
};

inline constexpr int kFamilyCount = 9;

const char* family_name(TransformFamily family);
std::optional<TransformFamily> family_from_name(std::string_view name);
std::vector<TransformFamily> all_families();
bool family_is_polynomial(TransformFamily family);

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Bounds&) const = default;
};

struct TransformBounds {
    Bounds beta{1.0, 5.0};  // monomial exponent, continuous
    Bounds eps{1.0, 2.0};   // RBF width
    Bounds omega{1.0, 2.0}; // sinusoidal angular frequency
    Bounds psi{1.0, 5.0};   // sinusoidal phase
    int degree_lo = 1;      // polynomial degree, uniform over integers
    int degree_hi = 5;
    bool operator==(const TransformBounds&) const = default;
};

struct ChannelParams {
    double beta = 0.0;
    double eps = 0.0;
    double omega = 0.0;
    double psi = 0.0;
    int degree = 0;
    bool operator==(const ChannelParams&) const = default;
};

struct TransformSpec {
    TransformFamily family = TransformFamily::Sinusoidal;
    std::vector<ChannelParams> params; // one tuple per generated channel
    std::uint64_t seed = 0;
    TransformBounds bounds;
    bool operator==(const TransformSpec&) const = default;
};

TransformSpec sample_hyperparams(std::uint64_t seed, TransformFamily family, int count,
                                 const TransformBounds& bounds = {});

// Scalar family formula for one channel's hyperparameters.
double transform_value(const TransformSpec& spec, int channel, double x);

// (value, d/dx). Hyperparameters receive no gradient by construction.
std::pair<double, double> transform_value_and_derivative(const TransformSpec& spec, int channel,
                                                         double x);

// Three-term recurrence evaluation; agrees with the closed forms.
double eval_polynomial_recurrence(TransformFamily family, int n, double x);
std::pair<double, double> polynomial_value_and_derivative(TransformFamily family, int n, double x);

// Elementwise differentiable application of one channel's transform.
template <typename T>
TensorPtr<T> eval_transform(ComputationRecord<T>* rec, const TransformSpec& spec, int channel,
                            const TensorPtr<T>& x);

} // namespace sinefm
