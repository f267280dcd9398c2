#include "dstg/optim.hpp"

#include <cmath>

namespace dstg {

SgdMomentum::SgdMomentum(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {
    if (learning_rate <= 0.0) throw ValidationError("SgdMomentum: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("SgdMomentum: momentum must be in [0,1)");
}

void SgdMomentum::register_param(const Tensor& p) {
    params_.push_back(p);
    velocity_.emplace_back(static_cast<size_t>(p.size()), 0.0);
}

void SgdMomentum::register_params(const std::vector<Tensor>& ps) {
    for (const Tensor& p : ps) register_param(p);
}

void SgdMomentum::set_learning_rate(double lr) {
    if (lr <= 0.0) throw ValidationError("SgdMomentum: learning rate must be positive");
    lr_ = lr;
}

void SgdMomentum::step() {
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = params_[pi];
        if (!p.has_grad()) throw NumericError("sgd step: missing grad for parameter " + std::to_string(pi));
        const std::vector<double>& g = p.grad_view();
        std::vector<double>& v = velocity_[pi];
        double* pv = p.data();
        for (size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("sgd step: non-finite grad in parameter " + std::to_string(pi));
            v[i] = momentum_ * v[i] + g[i];
            pv[i] -= lr_ * v[i];
        }
    }
}

void SgdMomentum::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace dstg
