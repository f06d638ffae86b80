#pragma once

// Minimal dense rank-4 tensor plus a reverse-mode tape. Tensors are
// immutable after construction except for the grad buffer, which is written
// only while the owning record runs backward.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sinefm/errors.hpp"

namespace sinefm {

struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::int64_t numel() const {
        return static_cast<std::int64_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false;
    std::vector<T> grad; // allocated lazily during backward

    explicit Tensor(Shape s, bool rg = false)
        : shape(s), data(static_cast<std::size_t>(s.numel()), T(0)), requires_grad(rg) {}

    Tensor(Shape s, std::vector<T> values, bool rg = false)
        : shape(s), data(std::move(values)), requires_grad(rg) {
        if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + to_string(shape));
        }
    }

    T& at(int n_, int c_, int h_, int w_) {
        return data[((static_cast<std::size_t>(n_) * shape.c + c_) * shape.h + h_) * shape.w + w_];
    }
    const T& at(int n_, int c_, int h_, int w_) const {
        return data[((static_cast<std::size_t>(n_) * shape.c + c_) * shape.h + h_) * shape.w + w_];
    }

    bool has_grad() const { return !grad.empty(); }

    std::vector<T>& ensure_grad() {
        if (grad.empty()) {
            grad.assign(data.size(), T(0));
        }
        return grad;
    }

    void zero_grad() {
        if (!grad.empty()) {
            grad.assign(grad.size(), T(0));
        }
    }
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> make_tensor(Shape s, bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(s, requires_grad);
}

template <typename T>
TensorPtr<T> make_tensor(Shape s, std::vector<T> values, bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(s, std::move(values), requires_grad);
}

template <typename T>
TensorPtr<T> scalar_tensor(T value) {
    return make_tensor<T>(Shape{1, 1, 1, 1}, std::vector<T>{value});
}

// Ordered log of executed differentiable operations. Replaying the steps in
// reverse visits each op exactly once; the record is consumed by backward.
template <typename T>
class ComputationRecord {
public:
    void push(std::function<void()> step) { steps_.push_back(std::move(step)); }

    void backward(const TensorPtr<T>& loss);

    bool consumed() const { return consumed_; }
    std::size_t size() const { return steps_.size(); }

    // When non-null, relu ops append their input sign patterns here
    // (dead zone 1e-6). grad_check uses this to detect kink crossings.
    std::vector<std::vector<std::int8_t>>* kink_log = nullptr;

private:
    std::vector<std::function<void()>> steps_;
    bool consumed_ = false;
};

template <typename T>
void ComputationRecord<T>::backward(const TensorPtr<T>& loss) {
    if (consumed_) {
        throw StateError("backward called on a consumed record; re-run forward first");
    }
    if (!loss || loss->shape.numel() != 1) {
        throw ArgumentError("backward requires a scalar loss tensor");
    }
    consumed_ = true;
    loss->ensure_grad();
    loss->grad[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
        (*it)();
    }
}

extern template struct Tensor<float>;
extern template struct Tensor<double>;
extern template class ComputationRecord<float>;
extern template class ComputationRecord<double>;

} // namespace sinefm
