#include <doctest.h>

#include <cmath>

#include "sinefm/gradcheck.hpp"
#include "sinefm/ops.hpp"
#include "sinefm/rng.hpp"
#include "sinefm/tensor.hpp"

using namespace sinefm;

namespace {

// Independent conv oracle: explicit zero-padded patch dot products, no
// shared code with the im2col path.
TensorPtr<double> naive_conv(const TensorPtr<double>& x, const TensorPtr<double>& w, int stride,
                             int pad) {
    const int ho = (x->shape.h + 2 * pad - w->shape.h) / stride + 1;
    const int wo = (x->shape.w + 2 * pad - w->shape.w) / stride + 1;
    auto out = make_tensor<double>(Shape{x->shape.n, w->shape.n, ho, wo});
    for (int n = 0; n < x->shape.n; ++n) {
        for (int co = 0; co < w->shape.n; ++co) {
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = 0.0;
                    for (int ci = 0; ci < x->shape.c; ++ci) {
                        for (int ky = 0; ky < w->shape.h; ++ky) {
                            for (int kx = 0; kx < w->shape.w; ++kx) {
                                const int iy = oy * stride + ky - pad;
                                const int ix = ox * stride + kx - pad;
                                if (iy < 0 || iy >= x->shape.h || ix < 0 || ix >= x->shape.w) {
                                    continue;
                                }
                                acc += x->at(n, ci, iy, ix) * w->at(co, ci, ky, kx);
                            }
                        }
                    }
                    out->at(n, co, oy, ox) = acc;
                }
            }
        }
    }
    return out;
}

TensorPtr<double> random_tensor(Shape s, Xoshiro256ss& rng, double lo = -1.0, double hi = 1.0) {
    auto t = make_tensor<double>(s);
    for (auto& v : t->data) v = rng.uniform(lo, hi);
    return t;
}

// Weighted quadratic-free loss: sum(x * w) with fixed random weights, so
// structured outputs (mean-free maps etc.) cannot hide gradient errors.
double op_grad_check(const std::function<TensorPtr<double>(ComputationRecord<double>&,
                                                           const TensorPtr<double>&)>& op,
                     const TensorPtr<double>& x, std::uint64_t weight_seed = 99) {
    Xoshiro256ss rng(weight_seed);
    TensorPtr<double> weights;
    const ForwardFn fn = [&](ComputationRecord<double>& rec) {
        auto y = op(rec, x);
        if (!weights) {
            weights = random_tensor(y->shape, rng);
        }
        return sum_all(&rec, mul(&rec, y, weights));
    };
    return grad_check(fn, {x});
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("tensor invariants") {
    auto t = make_tensor<double>(Shape{2, 3, 4, 5});
    CHECK(t->shape.numel() == 120);
    CHECK(t->data.size() == 120);
    CHECK_FALSE(t->has_grad());
    t->ensure_grad();
    CHECK(t->grad.size() == t->data.size());
    CHECK_THROWS_AS(make_tensor<double>(Shape{1, 1, 2, 2}, std::vector<double>{1.0, 2.0}),
                    DimensionError);
}

TEST_CASE("conv2d identity kernel") {
    auto x = make_tensor<double>(Shape{1, 1, 3, 3}, std::vector<double>(9, 2.0));
    auto w = make_tensor<double>(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
    auto y = conv2d<double>(nullptr, x, w, 1, 0);
    CHECK(y->shape == Shape{1, 1, 3, 3});
    for (const double v : y->data) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("conv2d all-ones dot product") {
    auto x = make_tensor<double>(Shape{1, 1, 3, 3}, std::vector<double>(9, 1.0));
    auto w = make_tensor<double>(Shape{1, 1, 3, 3}, std::vector<double>(9, 1.0));
    auto y = conv2d<double>(nullptr, x, w, 1, 0);
    CHECK(y->shape == Shape{1, 1, 1, 1});
    CHECK(y->data[0] == doctest::Approx(9.0));
}

TEST_CASE("conv2d shape rule") {
    auto x = make_tensor<double>(Shape{2, 3, 8, 8});
    auto w = make_tensor<double>(Shape{16, 3, 3, 3});
    auto y = conv2d<double>(nullptr, x, w, 1, 1);
    CHECK(y->shape == Shape{2, 16, 8, 8});
}

TEST_CASE("conv2d argument and dimension errors") {
    auto x = make_tensor<double>(Shape{1, 3, 8, 8});
    auto w = make_tensor<double>(Shape{4, 2, 3, 3});
    CHECK_THROWS_AS(conv2d<double>(nullptr, x, w, 1, 1), DimensionError);
    auto w_ok = make_tensor<double>(Shape{4, 3, 3, 3});
    CHECK_THROWS_AS(conv2d<double>(nullptr, x, w_ok, 0, 1), ArgumentError);
    CHECK_THROWS_AS(conv2d<double>(nullptr, x, w_ok, -1, 1), ArgumentError);
    auto w_big = make_tensor<double>(Shape{4, 3, 9, 9});
    CHECK_THROWS_AS(conv2d<double>(nullptr, x, w_big, 1, 0), DimensionError);
}

TEST_CASE("conv2d is linear in its input") {
    Xoshiro256ss rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        const int ci = 1 + static_cast<int>(rng.uniform_int(0, 2));
        const int co = 1 + static_cast<int>(rng.uniform_int(0, 3));
        const int k = 2 * static_cast<int>(rng.uniform_int(0, 1)) + 1;
        auto x1 = random_tensor(Shape{2, ci, 6, 6}, rng);
        auto x2 = random_tensor(Shape{2, ci, 6, 6}, rng);
        auto w = random_tensor(Shape{co, ci, k, k}, rng);
        const double a = rng.uniform(-2.0, 2.0);
        const double b = rng.uniform(-2.0, 2.0);
        auto mix = make_tensor<double>(x1->shape);
        for (std::size_t i = 0; i < mix->data.size(); ++i) {
            mix->data[i] = a * x1->data[i] + b * x2->data[i];
        }
        auto lhs = conv2d<double>(nullptr, mix, w, 1, 1);
        auto y1 = conv2d<double>(nullptr, x1, w, 1, 1);
        auto y2 = conv2d<double>(nullptr, x2, w, 1, 1);
        for (std::size_t i = 0; i < lhs->data.size(); ++i) {
            CHECK(lhs->data[i] == doctest::Approx(a * y1->data[i] + b * y2->data[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("conv2d agrees with the naive patch-dot-product oracle") {
    Xoshiro256ss rng(17);
    const int configs[5][6] = {
        // n, ci, h, w(co), kernel, stride
        {1, 1, 5, 2, 3, 1}, {2, 3, 8, 4, 3, 1}, {1, 4, 9, 8, 3, 2}, {2, 2, 7, 5, 5, 1},
        {1, 3, 11, 6, 1, 2},
    };
    for (const auto& cfg : configs) {
        const int pad = cfg[4] / 2;
        auto x = random_tensor(Shape{cfg[0], cfg[1], cfg[2], cfg[2]}, rng);
        auto w = random_tensor(Shape{cfg[3], cfg[1], cfg[4], cfg[4]}, rng);
        auto fast = conv2d<double>(nullptr, x, w, cfg[5], pad);
        auto slow = naive_conv(x, w, cfg[5], pad);
        REQUIRE(fast->shape == slow->shape);
        for (std::size_t i = 0; i < fast->data.size(); ++i) {
            CHECK(std::abs(fast->data[i] - slow->data[i]) < 1e-12);
        }
    }
}

TEST_CASE("relu definition and subgradient") {
    auto x = make_tensor<double>(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0});
    auto y = relu<double>(nullptr, x);
    CHECK(y->data == std::vector<double>{0.0, 0.0, 2.0});

    auto neg = make_tensor<double>(Shape{1, 2, 2, 2}, std::vector<double>(8, -0.5));
    auto zero = relu<double>(nullptr, neg);
    for (const double v : zero->data) CHECK(v == 0.0);

    // gradient of sum(relu(x)) at [-1, 2] is [0, 1]
    auto x2 = make_tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{-1.0, 2.0});
    x2->requires_grad = true;
    ComputationRecord<double> rec;
    auto loss = sum_all(&rec, relu(&rec, x2));
    rec.backward(loss);
    CHECK(x2->grad == std::vector<double>{0.0, 1.0});
}

TEST_CASE("backward on trivial graphs") {
    // loss = sum(w * x), w=[2,3], x=[1,1] -> grad_w = [1,1]
    auto w = make_tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{2.0, 3.0}, true);
    auto x = make_tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{1.0, 1.0});
    ComputationRecord<double> rec;
    auto loss = sum_all(&rec, mul(&rec, w, x));
    rec.backward(loss);
    CHECK(w->grad == std::vector<double>{1.0, 1.0});

    // loss = sum(x^2) at [1,-2] -> grad [2,-4]
    auto x2 = make_tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{1.0, -2.0}, true);
    ComputationRecord<double> rec2;
    auto loss2 = sum_all(&rec2, mul(&rec2, x2, x2));
    rec2.backward(loss2);
    CHECK(x2->grad == std::vector<double>{2.0, -4.0});
}

TEST_CASE("backward errors") {
    auto x = make_tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{1.0, 2.0}, true);
    ComputationRecord<double> rec;
    auto y = mul(&rec, x, x);
    CHECK_THROWS_AS(rec.backward(y), ArgumentError); // non-scalar loss

    ComputationRecord<double> rec2;
    auto loss = sum_all(&rec2, mul(&rec2, x, x));
    rec2.backward(loss);
    CHECK_THROWS_AS(rec2.backward(loss), StateError); // consumed record
}

TEST_CASE("grad_check on an exact quadratic") {
    auto x = make_tensor<double>(Shape{1, 1, 1, 3}, std::vector<double>{1.0, 2.0, 3.0});
    const double err = grad_check(
        [&x](ComputationRecord<double>& rec) { return sum_all(&rec, mul(&rec, x, x)); }, {x});
    CHECK(err < 1e-8);
}

TEST_CASE("grad_check excludes relu kinks") {
    // x[1] sits exactly on the kink; without exclusion the finite
    // difference would report derivative 0.5 against analytic 0.
    auto x = make_tensor<double>(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0});
    const double err = grad_check(
        [&x](ComputationRecord<double>& rec) { return sum_all(&rec, relu(&rec, x)); }, {x});
    CHECK(err < 1e-8);
}

TEST_CASE("grad_check rejects non-deterministic functions") {
    auto x = make_tensor<double>(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
    int calls = 0;
    CHECK_THROWS_AS(grad_check(
                        [&x, &calls](ComputationRecord<double>& rec) {
                            auto y = scale(&rec, x, 1.0 + 0.001 * calls++);
                            return sum_all(&rec, y);
                        },
                        {x}),
                    ValidationError);
}

TEST_CASE("elementwise op gradients pass finite differences") {
    Xoshiro256ss rng(23);
    auto x = random_tensor(Shape{2, 3, 4, 4}, rng);
    CHECK(op_grad_check([](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return maxpool2(&rec, t);
          }, x) < 1e-4);
    CHECK(op_grad_check([](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return upsample_nearest2(&rec, t);
          }, x) < 1e-4);
    CHECK(op_grad_check([](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return global_avg_pool(&rec, t);
          }, x) < 1e-4);
    CHECK(op_grad_check([](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return scale(&rec, t, 2.5);
          }, x) < 1e-4);

    auto bias = random_tensor(Shape{1, 3, 1, 1}, rng);
    CHECK(op_grad_check([&bias](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return bias_add(&rec, t, bias);
          }, x) < 1e-4);

    auto other = random_tensor(Shape{2, 3, 4, 4}, rng);
    CHECK(op_grad_check([&other](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return concat_channels(&rec, t, other);
          }, x) < 1e-4);
    CHECK(op_grad_check([&other](ComputationRecord<double>& rec, const TensorPtr<double>& t) {
              return add(&rec, t, other);
          }, x) < 1e-4);
}

TEST_CASE("softmax cross entropy value and gradient") {
    // Two equal logits: loss = ln 2.
    auto logits = make_tensor<double>(Shape{1, 2, 1, 1}, std::vector<double>{0.0, 0.0});
    auto loss = softmax_cross_entropy<double>(nullptr, logits, {0});
    CHECK(loss->data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Xoshiro256ss rng(31);
    auto z = random_tensor(Shape{2, 4, 2, 2}, rng);
    std::vector<std::int32_t> labels(2 * 2 * 2);
    for (auto& l : labels) l = static_cast<std::int32_t>(rng.uniform_int(0, 3));
    const double err = grad_check(
        [&z, &labels](ComputationRecord<double>& rec) {
            return softmax_cross_entropy(&rec, z, labels);
        },
        {z});
    CHECK(err < 1e-4);

    CHECK_THROWS_AS(softmax_cross_entropy<double>(nullptr, z, {0, 1}), DimensionError);
    CHECK_THROWS_AS(softmax_cross_entropy<double>(nullptr, logits, {7}), ArgumentError);
}

TEST_CASE("bias_add shape validation") {
    auto x = make_tensor<double>(Shape{1, 3, 2, 2});
    auto bad = make_tensor<double>(Shape{1, 2, 1, 1});
    CHECK_THROWS_AS(bias_add<double>(nullptr, x, bad), DimensionError);
}

} // TEST_SUITE
