#include "sinefm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace sinefm {
namespace {

// C[M,N] += A[M,K] * B[K,N], row-major. The k-inner loop order streams B
// and vectorizes well at these sizes.
template <typename T>
void gemm_nn(int m, int k, int n, const T* a, const T* b, T* c) {
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const T av = a[static_cast<std::size_t>(i) * k + p];
            if (av == T(0)) continue;
            const T* brow = b + static_cast<std::size_t>(p) * n;
            T* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void gemm_nt(int m, int k, int n, const T* a, const T* b, T* c) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<std::size_t>(j) * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            c[static_cast<std::size_t>(i) * n + j] += acc;
        }
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_tn(int m, int k, int n, const T* a, const T* b, T* c) {
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<std::size_t>(p) * m;
        const T* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T av = arow[i];
            if (av == T(0)) continue;
            T* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

struct ConvGeometry {
    int n, c_in, h, w;
    int c_out, kernel;
    int stride, padding;
    int h_out, w_out;
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& weights, int stride,
                           int padding) {
    if (stride <= 0) {
        throw ArgumentError("conv2d stride must be positive, got " + std::to_string(stride));
    }
    if (padding < 0) {
        throw ArgumentError("conv2d padding must be nonnegative, got " + std::to_string(padding));
    }
    if (weights.shape.h != weights.shape.w) {
        throw DimensionError("conv2d expects square kernels, got " + to_string(weights.shape));
    }
    if (input.shape.c != weights.shape.c) {
        throw DimensionError("conv2d channel mismatch: input " + to_string(input.shape) +
                             " vs weights " + to_string(weights.shape));
    }
    ConvGeometry g{};
    g.n = input.shape.n;
    g.c_in = input.shape.c;
    g.h = input.shape.h;
    g.w = input.shape.w;
    g.c_out = weights.shape.n;
    g.kernel = weights.shape.h;
    g.stride = stride;
    g.padding = padding;
    g.h_out = (g.h + 2 * padding - g.kernel) / stride + 1;
    g.w_out = (g.w + 2 * padding - g.kernel) / stride + 1;
    if (g.h + 2 * padding < g.kernel || g.w + 2 * padding < g.kernel || g.h_out < 1 ||
        g.w_out < 1) {
        throw DimensionError("conv2d output would be empty for input " + to_string(input.shape) +
                             ", kernel " + std::to_string(g.kernel) + ", stride " +
                             std::to_string(stride) + ", padding " + std::to_string(padding));
    }
    return g;
}

// One sample's patches as a [c_in*K*K, h_out*w_out] column matrix.
template <typename T>
void im2col(const T* img, const ConvGeometry& g, T* cols) {
    const int hw_out = g.h_out * g.w_out;
    for (int c = 0; c < g.c_in; ++c) {
        const T* channel = img + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.kernel; ++ky) {
            for (int kx = 0; kx < g.kernel; ++kx) {
                T* row = cols + (static_cast<std::size_t>(c) * g.kernel * g.kernel +
                                 ky * g.kernel + kx) *
                                    hw_out;
                for (int oy = 0; oy < g.h_out; ++oy) {
                    const int iy = oy * g.stride + ky - g.padding;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(row + static_cast<std::size_t>(oy) * g.w_out,
                                  row + static_cast<std::size_t>(oy + 1) * g.w_out, T(0));
                        continue;
                    }
                    for (int ox = 0; ox < g.w_out; ++ox) {
                        const int ix = ox * g.stride + kx - g.padding;
                        row[static_cast<std::size_t>(oy) * g.w_out + ox] =
                            (ix >= 0 && ix < g.w) ? channel[static_cast<std::size_t>(iy) * g.w + ix]
                                                  : T(0);
                    }
                }
            }
        }
    }
}

// Scatter-add of a column matrix back onto one sample's image.
template <typename T>
void col2im_accumulate(const T* cols, const ConvGeometry& g, T* img) {
    const int hw_out = g.h_out * g.w_out;
    for (int c = 0; c < g.c_in; ++c) {
        T* channel = img + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.kernel; ++ky) {
            for (int kx = 0; kx < g.kernel; ++kx) {
                const T* row = cols + (static_cast<std::size_t>(c) * g.kernel * g.kernel +
                                       ky * g.kernel + kx) *
                                          hw_out;
                for (int oy = 0; oy < g.h_out; ++oy) {
                    const int iy = oy * g.stride + ky - g.padding;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int ox = 0; ox < g.w_out; ++ox) {
                        const int ix = ox * g.stride + kx - g.padding;
                        if (ix < 0 || ix >= g.w) continue;
                        channel[static_cast<std::size_t>(iy) * g.w + ix] +=
                            row[static_cast<std::size_t>(oy) * g.w_out + ox];
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
TensorPtr<T> conv2d(ComputationRecord<T>* rec, const TensorPtr<T>& input,
                    const TensorPtr<T>& weights, int stride, int padding) {
    const ConvGeometry g = conv_geometry(*input, *weights, stride, padding);
    auto out = make_tensor<T>(Shape{g.n, g.c_out, g.h_out, g.w_out});
    out->requires_grad = input->requires_grad || weights->requires_grad;

    const int patch = g.c_in * g.kernel * g.kernel;
    const int hw_out = g.h_out * g.w_out;
    std::vector<T> cols(static_cast<std::size_t>(patch) * hw_out);
    for (int n = 0; n < g.n; ++n) {
        im2col(input->data.data() + static_cast<std::size_t>(n) * g.c_in * g.h * g.w, g,
               cols.data());
        gemm_nn(g.c_out, patch, hw_out, weights->data.data(), cols.data(),
                out->data.data() + static_cast<std::size_t>(n) * g.c_out * hw_out);
    }

    if (rec && out->requires_grad) {
        rec->push([input, weights, out, g, patch, hw_out]() {
            if (!out->has_grad()) return;
            std::vector<T> cols(static_cast<std::size_t>(patch) * hw_out);
            std::vector<T> dcols;
            if (input->requires_grad) {
                input->ensure_grad();
                dcols.resize(cols.size());
            }
            if (weights->requires_grad) weights->ensure_grad();
            for (int n = 0; n < g.n; ++n) {
                const T* dout = out->grad.data() + static_cast<std::size_t>(n) * g.c_out * hw_out;
                if (weights->requires_grad) {
                    im2col(input->data.data() + static_cast<std::size_t>(n) * g.c_in * g.h * g.w,
                           g, cols.data());
                    // dW[c_out, patch] += dOut[c_out, hw] * cols[patch, hw]^T
                    gemm_nt(g.c_out, hw_out, patch, dout, cols.data(), weights->grad.data());
                }
                if (input->requires_grad) {
                    std::fill(dcols.begin(), dcols.end(), T(0));
                    // dCols[patch, hw] += W[c_out, patch]^T * dOut[c_out, hw]
                    gemm_tn(patch, g.c_out, hw_out, weights->data.data(), dout, dcols.data());
                    col2im_accumulate(dcols.data(), g,
                                      input->grad.data() +
                                          static_cast<std::size_t>(n) * g.c_in * g.h * g.w);
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> relu(ComputationRecord<T>* rec, const TensorPtr<T>& x) {
    auto out = make_tensor<T>(x->shape);
    out->requires_grad = x->requires_grad;
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        out->data[i] = x->data[i] > T(0) ? x->data[i] : T(0);
    }
    if (rec && rec->kink_log) {
        std::vector<std::int8_t> pattern(x->data.size());
        for (std::size_t i = 0; i < x->data.size(); ++i) {
            const double v = static_cast<double>(x->data[i]);
            pattern[i] = std::abs(v) < 1e-6 ? 0 : (v > 0 ? 1 : -1);
        }
        rec->kink_log->push_back(std::move(pattern));
    }
    if (rec && out->requires_grad) {
        rec->push([x, out]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (std::size_t i = 0; i < x->data.size(); ++i) {
                if (x->data[i] > T(0)) {
                    x->grad[i] += out->grad[i];
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> add(ComputationRecord<T>* rec, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    if (!(a->shape == b->shape)) {
        throw DimensionError("add shape mismatch: " + to_string(a->shape) + " vs " +
                             to_string(b->shape));
    }
    auto out = make_tensor<T>(a->shape);
    out->requires_grad = a->requires_grad || b->requires_grad;
    for (std::size_t i = 0; i < a->data.size(); ++i) {
        out->data[i] = a->data[i] + b->data[i];
    }
    if (rec && out->requires_grad) {
        rec->push([a, b, out]() {
            if (!out->has_grad()) return;
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> mul(ComputationRecord<T>* rec, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    if (!(a->shape == b->shape)) {
        throw DimensionError("mul shape mismatch: " + to_string(a->shape) + " vs " +
                             to_string(b->shape));
    }
    auto out = make_tensor<T>(a->shape);
    out->requires_grad = a->requires_grad || b->requires_grad;
    for (std::size_t i = 0; i < a->data.size(); ++i) {
        out->data[i] = a->data[i] * b->data[i];
    }
    if (rec && out->requires_grad) {
        rec->push([a, b, out]() {
            if (!out->has_grad()) return;
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->grad.size(); ++i)
                    a->grad[i] += out->grad[i] * b->data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->grad.size(); ++i)
                    b->grad[i] += out->grad[i] * a->data[i];
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> scale(ComputationRecord<T>* rec, const TensorPtr<T>& x, T factor) {
    auto out = make_tensor<T>(x->shape);
    out->requires_grad = x->requires_grad;
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        out->data[i] = x->data[i] * factor;
    }
    if (rec && out->requires_grad) {
        rec->push([x, out, factor]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (std::size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i] * factor;
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> concat_channels(ComputationRecord<T>* rec, const TensorPtr<T>& a,
                             const TensorPtr<T>& b) {
    if (a->shape.n != b->shape.n || a->shape.h != b->shape.h || a->shape.w != b->shape.w) {
        throw DimensionError("concat_channels mismatch: " + to_string(a->shape) + " vs " +
                             to_string(b->shape));
    }
    const int hw = a->shape.h * a->shape.w;
    const int ca = a->shape.c;
    const int cb = b->shape.c;
    auto out = make_tensor<T>(Shape{a->shape.n, ca + cb, a->shape.h, a->shape.w});
    out->requires_grad = a->requires_grad || b->requires_grad;
    for (int n = 0; n < a->shape.n; ++n) {
        std::memcpy(out->data.data() + static_cast<std::size_t>(n) * (ca + cb) * hw,
                    a->data.data() + static_cast<std::size_t>(n) * ca * hw,
                    sizeof(T) * static_cast<std::size_t>(ca) * hw);
        std::memcpy(out->data.data() + (static_cast<std::size_t>(n) * (ca + cb) + ca) * hw,
                    b->data.data() + static_cast<std::size_t>(n) * cb * hw,
                    sizeof(T) * static_cast<std::size_t>(cb) * hw);
    }
    if (rec && out->requires_grad) {
        rec->push([a, b, out, ca, cb, hw]() {
            if (!out->has_grad()) return;
            for (int n = 0; n < a->shape.n; ++n) {
                const T* g = out->grad.data() + static_cast<std::size_t>(n) * (ca + cb) * hw;
                if (a->requires_grad) {
                    a->ensure_grad();
                    T* ga = a->grad.data() + static_cast<std::size_t>(n) * ca * hw;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(ca) * hw; ++i)
                        ga[i] += g[i];
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    T* gb = b->grad.data() + static_cast<std::size_t>(n) * cb * hw;
                    const T* gsrc = g + static_cast<std::size_t>(ca) * hw;
                    for (std::size_t i = 0; i < static_cast<std::size_t>(cb) * hw; ++i)
                        gb[i] += gsrc[i];
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> bias_add(ComputationRecord<T>* rec, const TensorPtr<T>& x, const TensorPtr<T>& bias) {
    if (bias->shape.n != 1 || bias->shape.c != x->shape.c || bias->shape.h != 1 ||
        bias->shape.w != 1) {
        throw DimensionError("bias_add expects bias [1, C, 1, 1] matching input channels, got " +
                             to_string(bias->shape) + " for input " + to_string(x->shape));
    }
    auto out = make_tensor<T>(x->shape);
    out->requires_grad = x->requires_grad || bias->requires_grad;
    const int hw = x->shape.h * x->shape.w;
    for (int n = 0; n < x->shape.n; ++n) {
        for (int c = 0; c < x->shape.c; ++c) {
            const T bv = bias->data[c];
            const std::size_t base = (static_cast<std::size_t>(n) * x->shape.c + c) * hw;
            for (int i = 0; i < hw; ++i) {
                out->data[base + i] = x->data[base + i] + bv;
            }
        }
    }
    if (rec && out->requires_grad) {
        rec->push([x, bias, out, hw]() {
            if (!out->has_grad()) return;
            if (x->requires_grad) {
                x->ensure_grad();
                for (std::size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];
            }
            if (bias->requires_grad) {
                bias->ensure_grad();
                for (int n = 0; n < x->shape.n; ++n) {
                    for (int c = 0; c < x->shape.c; ++c) {
                        const std::size_t base =
                            (static_cast<std::size_t>(n) * x->shape.c + c) * hw;
                        T acc = T(0);
                        for (int i = 0; i < hw; ++i) acc += out->grad[base + i];
                        bias->grad[c] += acc;
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> maxpool2(ComputationRecord<T>* rec, const TensorPtr<T>& x) {
    if (x->shape.h < 2 || x->shape.w < 2) {
        throw DimensionError("maxpool2 needs spatial extents >= 2, got " + to_string(x->shape));
    }
    const int ho = x->shape.h / 2;
    const int wo = x->shape.w / 2;
    auto out = make_tensor<T>(Shape{x->shape.n, x->shape.c, ho, wo});
    out->requires_grad = x->requires_grad;
    auto argmax = std::make_shared<std::vector<std::int32_t>>(out->data.size());
    const int nc = x->shape.n * x->shape.c;
    for (int m = 0; m < nc; ++m) {
        const T* img = x->data.data() + static_cast<std::size_t>(m) * x->shape.h * x->shape.w;
        T* dst = out->data.data() + static_cast<std::size_t>(m) * ho * wo;
        std::int32_t* arg = argmax->data() + static_cast<std::size_t>(m) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                int best = (2 * oy) * x->shape.w + 2 * ox;
                T bv = img[best];
                const int cands[3] = {(2 * oy) * x->shape.w + 2 * ox + 1,
                                      (2 * oy + 1) * x->shape.w + 2 * ox,
                                      (2 * oy + 1) * x->shape.w + 2 * ox + 1};
                for (int idx : cands) {
                    if (img[idx] > bv) {
                        bv = img[idx];
                        best = idx;
                    }
                }
                dst[static_cast<std::size_t>(oy) * wo + ox] = bv;
                arg[static_cast<std::size_t>(oy) * wo + ox] = best;
            }
        }
    }
    if (rec && out->requires_grad) {
        rec->push([x, out, argmax, ho, wo, nc]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (int m = 0; m < nc; ++m) {
                T* gx = x->grad.data() + static_cast<std::size_t>(m) * x->shape.h * x->shape.w;
                const T* go = out->grad.data() + static_cast<std::size_t>(m) * ho * wo;
                const std::int32_t* arg = argmax->data() + static_cast<std::size_t>(m) * ho * wo;
                for (int i = 0; i < ho * wo; ++i) {
                    gx[arg[i]] += go[i];
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> upsample_nearest2(ComputationRecord<T>* rec, const TensorPtr<T>& x) {
    const int ho = x->shape.h * 2;
    const int wo = x->shape.w * 2;
    auto out = make_tensor<T>(Shape{x->shape.n, x->shape.c, ho, wo});
    out->requires_grad = x->requires_grad;
    const int nc = x->shape.n * x->shape.c;
    for (int m = 0; m < nc; ++m) {
        const T* img = x->data.data() + static_cast<std::size_t>(m) * x->shape.h * x->shape.w;
        T* dst = out->data.data() + static_cast<std::size_t>(m) * ho * wo;
        for (int y = 0; y < ho; ++y) {
            for (int xx = 0; xx < wo; ++xx) {
                dst[static_cast<std::size_t>(y) * wo + xx] =
                    img[static_cast<std::size_t>(y / 2) * x->shape.w + xx / 2];
            }
        }
    }
    if (rec && out->requires_grad) {
        rec->push([x, out, ho, wo, nc]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (int m = 0; m < nc; ++m) {
                T* gx = x->grad.data() + static_cast<std::size_t>(m) * x->shape.h * x->shape.w;
                const T* go = out->grad.data() + static_cast<std::size_t>(m) * ho * wo;
                for (int y = 0; y < ho; ++y) {
                    for (int xx = 0; xx < wo; ++xx) {
                        gx[static_cast<std::size_t>(y / 2) * x->shape.w + xx / 2] +=
                            go[static_cast<std::size_t>(y) * wo + xx];
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> global_avg_pool(ComputationRecord<T>* rec, const TensorPtr<T>& x) {
    auto out = make_tensor<T>(Shape{x->shape.n, x->shape.c, 1, 1});
    out->requires_grad = x->requires_grad;
    const int hw = x->shape.h * x->shape.w;
    const int nc = x->shape.n * x->shape.c;
    for (int m = 0; m < nc; ++m) {
        const T* img = x->data.data() + static_cast<std::size_t>(m) * hw;
        T acc = T(0);
        for (int i = 0; i < hw; ++i) acc += img[i];
        out->data[m] = acc / static_cast<T>(hw);
    }
    if (rec && out->requires_grad) {
        rec->push([x, out, hw, nc]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (int m = 0; m < nc; ++m) {
                const T g = out->grad[m] / static_cast<T>(hw);
                T* gx = x->grad.data() + static_cast<std::size_t>(m) * hw;
                for (int i = 0; i < hw; ++i) gx[i] += g;
            }
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> sum_all(ComputationRecord<T>* rec, const TensorPtr<T>& x) {
    T acc = T(0);
    for (const T v : x->data) acc += v;
    auto out = scalar_tensor<T>(acc);
    out->requires_grad = x->requires_grad;
    if (rec && out->requires_grad) {
        rec->push([x, out]() {
            if (!out->has_grad()) return;
            x->ensure_grad();
            for (std::size_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[0];
        });
    }
    return out;
}

template <typename T>
TensorPtr<T> softmax_cross_entropy(ComputationRecord<T>* rec, const TensorPtr<T>& logits,
                                   const std::vector<std::int32_t>& labels) {
    const int classes = logits->shape.c;
    const int hw = logits->shape.h * logits->shape.w;
    const std::size_t positions = static_cast<std::size_t>(logits->shape.n) * hw;
    if (labels.size() != positions) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(positions) + " positions");
    }
    double total = 0.0;
    for (int n = 0; n < logits->shape.n; ++n) {
        for (int p = 0; p < hw; ++p) {
            const std::int32_t label = labels[static_cast<std::size_t>(n) * hw + p];
            if (label < 0 || label >= classes) {
                throw ArgumentError("label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(classes) + ")");
            }
            double zmax = -1e300;
            for (int c = 0; c < classes; ++c) {
                zmax = std::max(zmax, static_cast<double>(logits->at(n, c, p / logits->shape.w,
                                                                     p % logits->shape.w)));
            }
            double sum = 0.0;
            for (int c = 0; c < classes; ++c) {
                sum += std::exp(static_cast<double>(logits->at(n, c, p / logits->shape.w,
                                                               p % logits->shape.w)) -
                                zmax);
            }
            const double lse = zmax + std::log(sum);
            total += lse - static_cast<double>(logits->at(n, label, p / logits->shape.w,
                                                          p % logits->shape.w));
        }
    }
    auto out = scalar_tensor<T>(static_cast<T>(total / static_cast<double>(positions)));
    out->requires_grad = logits->requires_grad;
    if (rec && out->requires_grad) {
        rec->push([logits, out, labels, classes, hw, positions]() {
            if (!out->has_grad()) return;
            logits->ensure_grad();
            const double gscale = static_cast<double>(out->grad[0]) / positions;
            for (int n = 0; n < logits->shape.n; ++n) {
                for (int p = 0; p < hw; ++p) {
                    const int y = p / logits->shape.w;
                    const int xx = p % logits->shape.w;
                    double zmax = -1e300;
                    for (int c = 0; c < classes; ++c) {
                        zmax = std::max(zmax, static_cast<double>(logits->at(n, c, y, xx)));
                    }
                    double sum = 0.0;
                    for (int c = 0; c < classes; ++c) {
                        sum += std::exp(static_cast<double>(logits->at(n, c, y, xx)) - zmax);
                    }
                    const std::int32_t label = labels[static_cast<std::size_t>(n) * hw + p];
                    for (int c = 0; c < classes; ++c) {
                        const double soft =
                            std::exp(static_cast<double>(logits->at(n, c, y, xx)) - zmax) / sum;
                        const double delta = (c == label) ? 1.0 : 0.0;
                        logits->grad[((static_cast<std::size_t>(n) * classes + c) * logits->shape.h +
                                      y) *
                                         logits->shape.w +
                                     xx] += static_cast<T>((soft - delta) * gscale);
                    }
                }
            }
        });
    }
    return out;
}

#define SINEFM_INSTANTIATE_OPS(T)                                                                \
    template TensorPtr<T> conv2d<T>(ComputationRecord<T>*, const TensorPtr<T>&,                  \
                                    const TensorPtr<T>&, int, int);                              \
    template TensorPtr<T> relu<T>(ComputationRecord<T>*, const TensorPtr<T>&);                   \
    template TensorPtr<T> add<T>(ComputationRecord<T>*, const TensorPtr<T>&,                     \
                                 const TensorPtr<T>&);                                           \
    template TensorPtr<T> mul<T>(ComputationRecord<T>*, const TensorPtr<T>&,                     \
                                 const TensorPtr<T>&);                                           \
    template TensorPtr<T> scale<T>(ComputationRecord<T>*, const TensorPtr<T>&, T);               \
    template TensorPtr<T> concat_channels<T>(ComputationRecord<T>*, const TensorPtr<T>&,         \
                                             const TensorPtr<T>&);                               \
    template TensorPtr<T> bias_add<T>(ComputationRecord<T>*, const TensorPtr<T>&,                \
                                      const TensorPtr<T>&);                                      \
    template TensorPtr<T> maxpool2<T>(ComputationRecord<T>*, const TensorPtr<T>&);               \
    template TensorPtr<T> upsample_nearest2<T>(ComputationRecord<T>*, const TensorPtr<T>&);      \
    template TensorPtr<T> global_avg_pool<T>(ComputationRecord<T>*, const TensorPtr<T>&);        \
    template TensorPtr<T> sum_all<T>(ComputationRecord<T>*, const TensorPtr<T>&);                \
    template TensorPtr<T> softmax_cross_entropy<T>(ComputationRecord<T>*, const TensorPtr<T>&,   \
                                                   const std::vector<std::int32_t>&);

SINEFM_INSTANTIATE_OPS(float)
SINEFM_INSTANTIATE_OPS(double)

#undef SINEFM_INSTANTIATE_OPS

} // namespace sinefm
