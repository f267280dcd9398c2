#include "dstg/init.hpp"

#include <cmath>

namespace dstg {

Tensor uniform_param(Shape shape, int fan_in, int fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor t(std::move(shape), 0.0, true);
    double* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i) p[i] = dist(rng);
    return t;
}

Tensor zero_param(Shape shape) {
    return Tensor(std::move(shape), 0.0, true);
}

}  // namespace dstg
