#include "dstg/gradcheck.hpp"

#include <cmath>

namespace dstg {

GradCheckResult grad_check_multi(const std::function<Tensor()>& fn, const std::vector<Tensor>& points,
                                 const std::vector<double>& epsilons, const std::vector<std::string>& names,
                                 double zero_skip) {
    if (epsilons.empty()) throw ValidationError("grad_check: need at least one epsilon");
    for (double e : epsilons)
        if (e <= 0.0) throw ValidationError("grad_check: epsilon must be positive");

    // Analytic pass.
    std::vector<std::vector<double>> analytic;
    {
        for (const Tensor& p : points) {
            if (!p.requires_grad()) throw ValidationError("grad_check: point tensor does not require grad");
            const_cast<Tensor&>(p).zero_grad();
        }
        GradientTape tape;
        Tensor loss = fn();
        if (loss.size() != 1)
            throw ShapeError("grad_check: function output must be scalar, got " + shape_to_string(loss.shape()));
        tape.backward(loss);
        for (const Tensor& p : points) analytic.push_back(const_cast<Tensor&>(p).grad());
    }

    GradCheckResult res;
    NoGradGuard no_grad;
    for (size_t pi = 0; pi < points.size(); ++pi) {
        Tensor p = points[pi];
        double* data = p.data();
        for (std::int64_t i = 0; i < p.size(); ++i) {
            const double saved = data[i];
            const double an = analytic[pi][static_cast<size_t>(i)];
            double best = std::numeric_limits<double>::infinity();
            bool skipped = false;
            for (double epsilon : epsilons) {
                data[i] = saved + epsilon;
                const double fp = fn().item();
                data[i] = saved - epsilon;
                const double fm = fn().item();
                data[i] = saved;
                const double fd = (fp - fm) / (2.0 * epsilon);
                if (std::fabs(an) <= zero_skip && std::fabs(fd) <= zero_skip) {
                    skipped = true;
                    break;
                }
                const double denom = std::max({std::fabs(an), std::fabs(fd), 1e-8});
                best = std::min(best, std::fabs(an - fd) / denom);
            }
            if (skipped) continue;
            if (best > res.max_rel_error) {
                res.max_rel_error = best;
                res.worst_param = pi < names.size() ? names[pi] : std::to_string(pi);
                res.worst_coord = static_cast<int>(i);
            }
        }
    }
    return res;
}

GradCheckResult grad_check(const std::function<Tensor()>& fn, const std::vector<Tensor>& points, double epsilon,
                           const std::vector<std::string>& names, double zero_skip) {
    return grad_check_multi(fn, points, {epsilon}, names, zero_skip);
}

}  // namespace dstg
