#pragma once

#include <random>

#include "dstg/tensor.hpp"

namespace dstg {

using Rng = std::mt19937_64;

// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)); the parameter is
// marked as requiring grad.
Tensor uniform_param(Shape shape, int fan_in, int fan_out, Rng& rng);

// Zero-initialized trainable parameter (biases).
Tensor zero_param(Shape shape);

}  // namespace dstg
