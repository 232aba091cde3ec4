#pragma once

#include <cmath>

#include "sissa/nn/tensor.hpp"
#include "sissa/util/rng.hpp"

namespace sissa::nn {

inline Tensor uniform_init(std::vector<int64_t> shape, float bound,
                           Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data)
        v = static_cast<float>(rng.uniform(-bound, bound));
    return t;
}

// Kaiming-uniform for affine / conv weights.
inline Tensor kaiming_uniform(std::vector<int64_t> shape, int64_t fan_in,
                              Rng& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
    return uniform_init(std::move(shape), bound, rng);
}

// Scaled uniform for recurrent weights, variance ~ 1/fan_in.
inline Tensor recurrent_uniform(std::vector<int64_t> shape, int64_t fan_in,
                                Rng& rng) {
    const float bound = std::sqrt(3.0f / static_cast<float>(fan_in));
    return uniform_init(std::move(shape), bound, rng);
}

}  // namespace sissa::nn
