#include "sinefm/tensor.hpp"

namespace sinefm {

std::string to_string(const Shape& s) {
    return "[" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) +
           ", " + std::to_string(s.w) + "]";
}

template struct Tensor<float>;
template struct Tensor<double>;
template class ComputationRecord<float>;
template class ComputationRecord<double>;

} // namespace sinefm
