#include "sinefm/layer.hpp"

#include <cmath>

namespace sinefm {

ChannelPlan channel_plan(int c_out, int c_s, int k) {
    if (c_s < 1 || c_s > c_out) {
        throw ArgumentError("channel_plan requires 1 <= c_s <= c_out, got c_s=" +
                            std::to_string(c_s) + ", c_out=" + std::to_string(c_out));
    }
    if (k < 1) {
        throw ArgumentError("channel_plan requires fan-out k >= 1, got " + std::to_string(k));
    }
    ChannelPlan plan;
    plan.c_g = c_s * ((c_out + c_s - 1) / c_s - 1);
    plan.combine_in = k * c_s;
    plan.combine_out = c_out - c_s;
    return plan;
}

std::vector<std::pair<int, int>> transform_channel_assignment(const ChannelPlan& plan, int c_s) {
    std::vector<std::pair<int, int>> assignment;
    assignment.reserve(plan.combine_in);
    for (int j = 0; j < plan.combine_in; ++j) {
        assignment.emplace_back(j, j % c_s);
    }
    return assignment;
}

template <typename T>
TensorPtr<T> normalize_maps(ComputationRecord<T>* rec, const TensorPtr<T>& y, double eps) {
    const int hw = y->shape.h * y->shape.w;
    if (hw < 1) {
        throw DimensionError("normalize_maps needs at least one spatial element");
    }
    auto out = make_tensor<T>(y->shape);
    out->requires_grad = y->requires_grad;
    const int maps = y->shape.n * y->shape.c;
    for (int m = 0; m < maps; ++m) {
        const T* src = y->data.data() + static_cast<std::size_t>(m) * hw;
        T* dst = out->data.data() + static_cast<std::size_t>(m) * hw;
        double mean = 0.0;
        for (int i = 0; i < hw; ++i) mean += static_cast<double>(src[i]);
        mean /= hw;
        double sq = 0.0;
        for (int i = 0; i < hw; ++i) {
            const double u = static_cast<double>(src[i]) - mean;
            sq += u * u;
        }
        const double denom = std::sqrt(sq) + eps;
        for (int i = 0; i < hw; ++i) {
            dst[i] = static_cast<T>((static_cast<double>(src[i]) - mean) / denom);
        }
    }
    if (rec && out->requires_grad) {
        rec->push([y, out, eps, hw, maps]() {
            if (!out->has_grad()) return;
            y->ensure_grad();
            // y_i = u_i / (r + eps) with u = x - mean(x), r = ||u||_2:
            // dL/dx_j = (g_j - mean(g)) / (r + eps) - u_j (g . u) / (r (r + eps)^2)
            for (int m = 0; m < maps; ++m) {
                const T* src = y->data.data() + static_cast<std::size_t>(m) * hw;
                const T* go = out->grad.data() + static_cast<std::size_t>(m) * hw;
                T* gy = y->grad.data() + static_cast<std::size_t>(m) * hw;
                double mean = 0.0;
                for (int i = 0; i < hw; ++i) mean += static_cast<double>(src[i]);
                mean /= hw;
                double sq = 0.0, gmean = 0.0, gdotu = 0.0;
                for (int i = 0; i < hw; ++i) {
                    const double u = static_cast<double>(src[i]) - mean;
                    sq += u * u;
                    gmean += static_cast<double>(go[i]);
                    gdotu += static_cast<double>(go[i]) * u;
                }
                gmean /= hw;
                const double r = std::sqrt(sq);
                const double denom = r + eps;
                const double coef = r > 0.0 ? gdotu / (r * denom * denom) : 0.0;
                for (int i = 0; i < hw; ++i) {
                    const double u = static_cast<double>(src[i]) - mean;
                    gy[i] += static_cast<T>((static_cast<double>(go[i]) - gmean) / denom -
                                            u * coef);
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> generate_maps(ComputationRecord<T>* rec, const TensorPtr<T>& seed_maps,
                           const TransformSpec& spec) {
    const int c_s = seed_maps->shape.c;
    const int c_gen = static_cast<int>(spec.params.size());
    const int hw = seed_maps->shape.h * seed_maps->shape.w;
    auto out = make_tensor<T>(Shape{seed_maps->shape.n, c_gen, seed_maps->shape.h,
                                    seed_maps->shape.w});
    out->requires_grad = seed_maps->requires_grad;
    for (int n = 0; n < seed_maps->shape.n; ++n) {
        for (int j = 0; j < c_gen; ++j) {
            const T* src =
                seed_maps->data.data() + (static_cast<std::size_t>(n) * c_s + j % c_s) * hw;
            T* dst = out->data.data() + (static_cast<std::size_t>(n) * c_gen + j) * hw;
            for (int i = 0; i < hw; ++i) {
                dst[i] = static_cast<T>(transform_value(spec, j, static_cast<double>(src[i])));
            }
        }
    }
    if (rec && out->requires_grad) {
        const TransformSpec frozen = spec;
        rec->push([seed_maps, out, frozen, c_s, c_gen, hw]() {
            if (!out->has_grad()) return;
            seed_maps->ensure_grad();
            for (int n = 0; n < seed_maps->shape.n; ++n) {
                for (int j = 0; j < c_gen; ++j) {
                    const T* src = seed_maps->data.data() +
                                   (static_cast<std::size_t>(n) * c_s + j % c_s) * hw;
                    T* gsrc = seed_maps->grad.data() +
                              (static_cast<std::size_t>(n) * c_s + j % c_s) * hw;
                    const T* go = out->grad.data() + (static_cast<std::size_t>(n) * c_gen + j) * hw;
                    for (int i = 0; i < hw; ++i) {
                        const double d =
                            transform_value_and_derivative(frozen, j, static_cast<double>(src[i]))
                                .second;
                        gsrc[i] += static_cast<T>(d * static_cast<double>(go[i]));
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
SineFMLayer<T> SineFMLayer<T>::make(const SineFMConfig& config, Xoshiro256ss& init_rng) {
    if (config.kernel < 1 || config.kernel % 2 == 0) {
        throw ArgumentError("SineFM kernel must be odd and positive, got " +
                            std::to_string(config.kernel));
    }
    const ChannelPlan plan = channel_plan(config.c_out, config.c_s, config.fanout);
    SineFMLayer<T> layer;
    layer.config = config;
    layer.seed_filters = make_tensor<T>(
        Shape{config.c_s, config.c_in, config.kernel, config.kernel});
    const double bound =
        std::sqrt(1.0 / (static_cast<double>(config.c_in) * config.kernel * config.kernel));
    for (auto& v : layer.seed_filters->data) {
        v = static_cast<T>(init_rng.uniform(-bound, bound));
    }
    if (plan.combine_out > 0) {
        layer.transform =
            sample_hyperparams(config.seed, config.family, plan.combine_in, config.bounds);
        layer.combine = make_tensor<T>(Shape{plan.combine_out, plan.combine_in, 1, 1});
        const double cb = std::sqrt(1.0 / static_cast<double>(plan.combine_in));
        for (auto& v : layer.combine->data) {
            v = static_cast<T>(init_rng.uniform(-cb, cb));
        }
    }
    return layer;
}

template <typename T>
TensorPtr<T> SineFMLayer<T>::forward(ComputationRecord<T>* rec, const TensorPtr<T>& x) const {
    if (x->shape.c != config.c_in) {
        throw DimensionError("SineFM layer expects " + std::to_string(config.c_in) +
                             " input channels, got " + to_string(x->shape));
    }
    auto seed_maps = conv2d(rec, x, seed_filters, config.stride, config.padding);
    if (!combine) {
        return seed_maps; // degenerate plan: plain seed convolution
    }
    auto raw = generate_maps(rec, seed_maps, transform);
    auto normalized = normalize_maps(rec, raw);
    auto combined = conv2d(rec, normalized, combine, 1, 0);
    return concat_channels(rec, seed_maps, combined);
}

AlphaFit fit_alpha(const Tensor<double>& seed_filter, const TransformSpec& spec,
                   const Tensor<double>& target_filter, const Tensor<double>& patches) {
    const int m = static_cast<int>(spec.params.size());
    const int patch_len = patches.shape.c;
    const int count = patches.shape.n;
    if (seed_filter.shape.numel() != patch_len || target_filter.shape.numel() != patch_len) {
        throw DimensionError("fit_alpha: filters must match patch length " +
                             std::to_string(patch_len));
    }
    if (count < m) {
        throw ArgumentError("fit_alpha needs at least m patches: " + std::to_string(count) +
                            " < " + std::to_string(m));
    }

    // Response matrix C[p][i] = relu(phi_i(w_s . x_p)); targets d_p = relu(w . x_p).
    std::vector<double> responses(static_cast<std::size_t>(count) * m);
    std::vector<double> targets(count);
    bool any_response = false;
    for (int p = 0; p < count; ++p) {
        const double* row = patches.data.data() + static_cast<std::size_t>(p) * patch_len;
        double s = 0.0, d = 0.0;
        for (int i = 0; i < patch_len; ++i) {
            s += seed_filter.data[i] * row[i];
            d += target_filter.data[i] * row[i];
        }
        targets[p] = d > 0.0 ? d : 0.0;
        for (int i = 0; i < m; ++i) {
            const double c = transform_value(spec, i, s);
            const double cr = c > 0.0 ? c : 0.0;
            responses[static_cast<std::size_t>(p) * m + i] = cr;
            any_response = any_response || cr != 0.0;
        }
    }

    AlphaFit fit;
    fit.alpha.assign(m, 0.0);
    if (!any_response) {
        // The d > 0, c = 0 failure case: no combination can respond.
        double sq = 0.0;
        bool any_target = false;
        for (const double d : targets) {
            sq += d * d;
            any_target = any_target || d != 0.0;
        }
        fit.residual = std::sqrt(sq / count);
        fit.degenerate = any_target;
        return fit;
    }

    // Ridge-regularized normal equations (C^T C + lambda I) alpha = C^T d,
    // solved by Cholesky; lambda keeps the system positive definite.
    const double lambda = 1e-8;
    std::vector<double> gram(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> rhs(m, 0.0);
    for (int p = 0; p < count; ++p) {
        const double* row = responses.data() + static_cast<std::size_t>(p) * m;
        for (int i = 0; i < m; ++i) {
            rhs[i] += row[i] * targets[p];
            for (int j = i; j < m; ++j) {
                gram[static_cast<std::size_t>(i) * m + j] += row[i] * row[j];
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        gram[static_cast<std::size_t>(i) * m + i] += lambda;
        for (int j = 0; j < i; ++j) {
            gram[static_cast<std::size_t>(i) * m + j] = gram[static_cast<std::size_t>(j) * m + i];
        }
    }
    // In-place Cholesky factorization gram = L L^T.
    std::vector<double> chol(gram);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = chol[static_cast<std::size_t>(i) * m + j];
            for (int k = 0; k < j; ++k) {
                sum -= chol[static_cast<std::size_t>(i) * m + k] *
                       chol[static_cast<std::size_t>(j) * m + k];
            }
            if (i == j) {
                if (sum <= 0.0) {
                    throw NumericError("fit_alpha: normal equations not positive definite");
                }
                chol[static_cast<std::size_t>(i) * m + j] = std::sqrt(sum);
            } else {
                chol[static_cast<std::size_t>(i) * m + j] =
                    sum / chol[static_cast<std::size_t>(j) * m + j];
            }
        }
    }
    // Forward then backward substitution.
    std::vector<double> y(m);
    for (int i = 0; i < m; ++i) {
        double sum = rhs[i];
        for (int k = 0; k < i; ++k) sum -= chol[static_cast<std::size_t>(i) * m + k] * y[k];
        y[i] = sum / chol[static_cast<std::size_t>(i) * m + i];
    }
    for (int i = m - 1; i >= 0; --i) {
        double sum = y[i];
        for (int k = i + 1; k < m; ++k)
            sum -= chol[static_cast<std::size_t>(k) * m + i] * fit.alpha[k];
        fit.alpha[i] = sum / chol[static_cast<std::size_t>(i) * m + i];
    }

    double sq = 0.0;
    for (int p = 0; p < count; ++p) {
        const double* row = responses.data() + static_cast<std::size_t>(p) * m;
        double pred = 0.0;
        for (int i = 0; i < m; ++i) pred += row[i] * fit.alpha[i];
        const double e = pred - targets[p];
        sq += e * e;
    }
    fit.residual = std::sqrt(sq / count);
    return fit;
}

#define SINEFM_INSTANTIATE_LAYER(T)                                                             \
    template TensorPtr<T> normalize_maps<T>(ComputationRecord<T>*, const TensorPtr<T>&, double); \
    template TensorPtr<T> generate_maps<T>(ComputationRecord<T>*, const TensorPtr<T>&,          \
                                           const TransformSpec&);                               \
    template struct SineFMLayer<T>;

SINEFM_INSTANTIATE_LAYER(float)
SINEFM_INSTANTIATE_LAYER(double)

#undef SINEFM_INSTANTIATE_LAYER

} // namespace sinefm
