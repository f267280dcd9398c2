#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dstg/errors.hpp"

namespace dstg {

class GradientTape;

using Shape = std::vector<int>;

std::string shape_to_string(const Shape& s);
std::int64_t shape_numel(const Shape& s);

// Dense double-precision storage shared by Tensor handles.
struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated on demand, same extent as values
    bool requires_grad = false;
    const GradientTape* creator = nullptr;  // tape that recorded the producing op

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

// Value-semantics handle to a dense rank-n tensor. Copying a Tensor copies the
// handle, not the buffer; clone() makes a deep copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int dim(int axis) const { return d_->shape.at(static_cast<size_t>(axis)); }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(d_->values.size()); }

    double* data() { return d_->values.data(); }
    const double* data() const { return d_->values.data(); }
    std::vector<double>& values() { return d_->values; }
    const std::vector<double>& values() const { return d_->values; }

    bool requires_grad() const { return d_->requires_grad; }
    void set_requires_grad(bool rg) { d_->requires_grad = rg; }
    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<double>& grad() {
        d_->ensure_grad();
        return d_->grad;
    }
    const std::vector<double>& grad_view() const { return d_->grad; }
    void zero_grad() {
        if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
    }

    double item() const;   // scalar extraction; throws ShapeError otherwise
    Tensor clone() const;  // deep copy, detached from any tape

    bool all_finite() const;
    void check_finite(const std::string& context) const;  // throws NumericError

    TensorData* node() const { return d_.get(); }
    std::shared_ptr<TensorData> handle() const { return d_; }

private:
    std::shared_ptr<TensorData> d_;
};

// Reverse-mode tape. Constructing a GradientTape makes it the active tape for
// the current thread; ops with a grad-requiring input record themselves onto
// it. One tape per model instance, single-threaded (see module contracts).
class GradientTape {
public:
    GradientTape();
    ~GradientTape();
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    // Seeds d(loss)/d(loss)=1 and replays recorded ops in reverse, visiting
    // each exactly once. Consumes the tape. Throws if loss is non-scalar or
    // was not produced through ops recorded on this tape.
    void backward(const Tensor& loss);

    std::size_t size() const { return ops_.size(); }
    bool consumed() const { return consumed_; }

    static GradientTape* active();

    struct Op {
        std::string name;
        std::vector<std::shared_ptr<TensorData>> inputs;
        std::shared_ptr<TensorData> output;
        std::function<void()> backward;
    };

    void record(Op op);

private:
    std::vector<Op> ops_;
    bool consumed_ = false;
    GradientTape* previous_ = nullptr;
};

// Exits recording for a scope (forward-only evaluation inside a tape region).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    GradientTape* saved_;
};

}  // namespace dstg
