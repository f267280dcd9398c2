#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dstg/tensor.hpp"

namespace dstg {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;  // "<index>[<coord>]" or a caller-supplied name
    int worst_coord = -1;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences, coordinate by coordinate. `fn` must be re-runnable and
// read the given tensors by reference. Relative error per coordinate is
//   |g_an - g_fd| / max(|g_an|, |g_fd|, 1e-8).
// Coordinates where both magnitudes are at most `zero_skip` are ignored:
// below the FD noise floor there is nothing left to compare.
GradCheckResult grad_check(const std::function<Tensor()>& fn, const std::vector<Tensor>& points, double epsilon,
                           const std::vector<std::string>& names = {}, double zero_skip = 0.0);

// Multi-step variant: each coordinate scores the best estimate across the
// given step sizes (no single epsilon resolves both near-kink and
// near-zero-gradient coordinates in double precision).
GradCheckResult grad_check_multi(const std::function<Tensor()>& fn, const std::vector<Tensor>& points,
                                 const std::vector<double>& epsilons, const std::vector<std::string>& names = {},
                                 double zero_skip = 0.0);

}  // namespace dstg
