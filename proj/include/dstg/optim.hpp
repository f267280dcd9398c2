#pragma once

#include <vector>

#include "dstg/tensor.hpp"

namespace dstg {

// SGD with momentum, accumulate-then-scale variant:
//   v <- momentum * v + g
//   p <- p - lr * v
// With momentum = 0 this is plain gradient descent, bit for bit.
class SgdMomentum {
public:
    SgdMomentum(double learning_rate, double momentum);

    void register_param(const Tensor& p);
    void register_params(const std::vector<Tensor>& ps);

    void set_learning_rate(double lr);
    double learning_rate() const { return lr_; }
    double momentum() const { return momentum_; }

    // Applies one update from the parameters' accumulated grads.
    // Throws NumericError when a grad is missing or non-finite.
    void step();
    void zero_grad();

    size_t num_params() const { return params_.size(); }
    const std::vector<double>& velocity(size_t i) const { return velocity_[i]; }

private:
    double lr_;
    double momentum_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> velocity_;
};

}  // namespace dstg
