#include "sinefm/transforms.hpp"

#include <cmath>

#include "sinefm/rng.hpp"

namespace sinefm {

namespace {

const char* kFamilyNames[kFamilyCount] = {
    "monomial",       "chebyshev",         "hermite",
    "legendre",       "gaussian",          "multiquadratic",
    "inverse_quadratic", "inverse_multiquadratic", "sinusoidal",
};

void check_bounds(const Bounds& b, const char* what) {
    if (b.lo > b.hi) {
        throw ArgumentError(std::string("invalid bounds for ") + what + ": lower " +
                            std::to_string(b.lo) + " > upper " + std::to_string(b.hi));
    }
}

} // namespace

const char* family_name(TransformFamily family) {
    return kFamilyNames[static_cast<int>(family)];
}

std::optional<TransformFamily> family_from_name(std::string_view name) {
    for (int i = 0; i < kFamilyCount; ++i) {
        if (name == kFamilyNames[i]) {
            return static_cast<TransformFamily>(i);
        }
    }
    return std::nullopt;
}

std::vector<TransformFamily> all_families() {
    std::vector<TransformFamily> out;
    out.reserve(kFamilyCount);
    for (int i = 0; i < kFamilyCount; ++i) {
        out.push_back(static_cast<TransformFamily>(i));
    }
    return out;
}

bool family_is_polynomial(TransformFamily family) {
    return family == TransformFamily::ChebyshevPoly || family == TransformFamily::HermitePoly ||
           family == TransformFamily::LegendrePoly;
}

TransformSpec sample_hyperparams(std::uint64_t seed, TransformFamily family, int count,
                                 const TransformBounds& bounds) {
    if (count < 1) {
        throw ArgumentError("sample_hyperparams count must be >= 1, got " + std::to_string(count));
    }
    check_bounds(bounds.beta, "beta");
    check_bounds(bounds.eps, "eps");
    check_bounds(bounds.omega, "omega");
    check_bounds(bounds.psi, "psi");
    if (bounds.degree_lo > bounds.degree_hi || bounds.degree_lo < 0) {
        throw ArgumentError("invalid polynomial degree bounds");
    }

    TransformSpec spec;
    spec.family = family;
    spec.seed = seed;
    spec.bounds = bounds;
    spec.params.resize(count);
    Xoshiro256ss rng(seed);
    for (auto& p : spec.params) {
        switch (family) {
        case TransformFamily::Monomial:
            p.beta = rng.uniform(bounds.beta.lo, bounds.beta.hi);
            break;
        case TransformFamily::ChebyshevPoly:
        case TransformFamily::HermitePoly:
        case TransformFamily::LegendrePoly:
            p.degree = static_cast<int>(rng.uniform_int(bounds.degree_lo, bounds.degree_hi));
            break;
        case TransformFamily::GaussianRBF:
        case TransformFamily::MultiquadraticRBF:
        case TransformFamily::InverseQuadraticRBF:
        case TransformFamily::InverseMultiquadraticRBF:
            p.eps = rng.uniform(bounds.eps.lo, bounds.eps.hi);
            break;
        case TransformFamily::Sinusoidal:
            p.omega = rng.uniform(bounds.omega.lo, bounds.omega.hi);
            p.psi = rng.uniform(bounds.psi.lo, bounds.psi.hi);
            break;
        }
    }
    return spec;
}

std::pair<double, double> polynomial_value_and_derivative(TransformFamily family, int n,
                                                          double x) {
    if (n < 0) {
        throw ArgumentError("polynomial degree must be nonnegative, got " + std::to_string(n));
    }
    // T0 = H0 = P0 = 1; carry (value, derivative) through the recurrence.
    double pk = 1.0, dpk = 0.0; // degree k
    if (n == 0) return {pk, dpk};
    double pk1, dpk1; // degree k+1
    switch (family) {
    case TransformFamily::ChebyshevPoly:
        pk1 = x;
        dpk1 = 1.0;
        break;
    case TransformFamily::HermitePoly:
        pk1 = 2.0 * x;
        dpk1 = 2.0;
        break;
    case TransformFamily::LegendrePoly:
        pk1 = x;
        dpk1 = 1.0;
        break;
    default:
        throw ArgumentError("not a polynomial family");
    }
    for (int k = 1; k < n; ++k) {
        double pnext, dpnext;
        switch (family) {
        case TransformFamily::ChebyshevPoly:
            // T_{k+1} = 2 x T_k - T_{k-1}
            pnext = 2.0 * x * pk1 - pk;
            dpnext = 2.0 * pk1 + 2.0 * x * dpk1 - dpk;
            break;
        case TransformFamily::HermitePoly:
            // H_{k+1} = 2 x H_k - 2 k H_{k-1} (physicists')
            pnext = 2.0 * x * pk1 - 2.0 * k * pk;
            dpnext = 2.0 * pk1 + 2.0 * x * dpk1 - 2.0 * k * dpk;
            break;
        default:
            // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
            pnext = ((2.0 * k + 1.0) * x * pk1 - k * pk) / (k + 1.0);
            dpnext = ((2.0 * k + 1.0) * (pk1 + x * dpk1) - k * dpk) / (k + 1.0);
            break;
        }
        pk = pk1;
        dpk = dpk1;
        pk1 = pnext;
        dpk1 = dpnext;
    }
    return {pk1, dpk1};
}

double eval_polynomial_recurrence(TransformFamily family, int n, double x) {
    return polynomial_value_and_derivative(family, n, x).first;
}

std::pair<double, double> transform_value_and_derivative(const TransformSpec& spec, int channel,
                                                         double x) {
    if (channel < 0 || channel >= static_cast<int>(spec.params.size())) {
        throw ArgumentError("transform channel " + std::to_string(channel) + " out of range [0, " +
                            std::to_string(spec.params.size()) + ")");
    }
    const ChannelParams& p = spec.params[channel];
    switch (spec.family) {
    case TransformFamily::Monomial: {
        // sign(x) |x|^beta with sign(0) = 0; derivative clamped to 0 at the
        // kink when beta < 1.
        if (x == 0.0) {
            return {0.0, p.beta >= 1.0 ? (p.beta == 1.0 ? 1.0 : 0.0) : 0.0};
        }
        const double ax = std::abs(x);
        const double value = (x > 0 ? 1.0 : -1.0) * std::pow(ax, p.beta);
        const double deriv = p.beta * std::pow(ax, p.beta - 1.0);
        return {value, deriv};
    }
    case TransformFamily::ChebyshevPoly:
    case TransformFamily::HermitePoly:
    case TransformFamily::LegendrePoly:
        return polynomial_value_and_derivative(spec.family, p.degree, x);
    case TransformFamily::GaussianRBF: {
        const double u = p.eps * x;
        const double value = std::exp(-u * u);
        return {value, -2.0 * p.eps * u * value};
    }
    case TransformFamily::MultiquadraticRBF: {
        const double u = p.eps * x;
        const double value = std::sqrt(1.0 + u * u);
        return {value, p.eps * u / value};
    }
    case TransformFamily::InverseQuadraticRBF: {
        const double u = p.eps * x;
        const double denom = 1.0 + u * u;
        return {1.0 / denom, -2.0 * p.eps * u / (denom * denom)};
    }
    case TransformFamily::InverseMultiquadraticRBF: {
        const double u = p.eps * x;
        const double denom = std::sqrt(1.0 + u * u);
        return {1.0 / denom, -p.eps * u / (denom * denom * denom)};
    }
    case TransformFamily::Sinusoidal:
        return {std::sin(p.omega * x + p.psi), p.omega * std::cos(p.omega * x + p.psi)};
    }
    throw ArgumentError("unknown transform family");
}

double transform_value(const TransformSpec& spec, int channel, double x) {
    return transform_value_and_derivative(spec, channel, x).first;
}

template <typename T>
TensorPtr<T> eval_transform(ComputationRecord<T>* rec, const TransformSpec& spec, int channel,
                            const TensorPtr<T>& x) {
    auto out = make_tensor<T>(x->shape);
    out->requires_grad = x->requires_grad;
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        out->data[i] =
            static_cast<T>(transform_value(spec, channel, static_cast<double>(x->data[i])));
    }
    if (rec && out->requires_grad) {
        const TransformSpec frozen = spec;
        rec->push([x, out, frozen, channel]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (std::size_t i = 0; i < x->data.size(); ++i) {
                const double d =
                    transform_value_and_derivative(frozen, channel, static_cast<double>(x->data[i]))
                        .second;
                x->grad[i] += static_cast<T>(d * static_cast<double>(out->grad[i]));
            }
        });
    }
    return out;
}

template TensorPtr<float> eval_transform<float>(ComputationRecord<float>*, const TransformSpec&,
                                                int, const TensorPtr<float>&);
template TensorPtr<double> eval_transform<double>(ComputationRecord<double>*, const TransformSpec&,
                                                  int, const TensorPtr<double>&);

} // namespace sinefm
