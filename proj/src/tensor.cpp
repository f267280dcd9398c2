#include "dstg/tensor.hpp"

#include <cmath>
#include <sstream>

namespace dstg {

namespace {
thread_local GradientTape* g_active_tape = nullptr;
}

std::string shape_to_string(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (int e : s) {
        if (e <= 0) throw ShapeError("tensor extent must be positive, got shape " + shape_to_string(s));
        n *= e;
    }
    return n;
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    d_ = std::make_shared<TensorData>();
    const std::int64_t n = shape_numel(shape);
    d_->shape = std::move(shape);
    d_->values.assign(static_cast<size_t>(n), fill);
    d_->requires_grad = requires_grad;
    if (requires_grad) d_->ensure_grad();
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    if (n != static_cast<std::int64_t>(values.size()))
        throw ShapeError("from_values: shape " + shape_to_string(shape) + " expects " + std::to_string(n) +
                         " values, got " + std::to_string(values.size()));
    Tensor t;
    t.d_ = std::make_shared<TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->values = std::move(values);
    t.d_->requires_grad = requires_grad;
    if (requires_grad) t.d_->ensure_grad();
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item: tensor is not scalar, shape " + shape_to_string(shape()));
    return d_->values[0];
}

Tensor Tensor::clone() const {
    return from_values(d_->shape, d_->values, d_->requires_grad);
}

bool Tensor::all_finite() const {
    for (double v : d_->values)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::check_finite(const std::string& context) const {
    if (!all_finite()) throw NumericError("non-finite value in " + context);
}

GradientTape::GradientTape() {
    previous_ = g_active_tape;
    g_active_tape = this;
}

GradientTape::~GradientTape() {
    g_active_tape = previous_;
}

GradientTape* GradientTape::active() {
    return g_active_tape;
}

void GradientTape::record(Op op) {
    op.output->creator = this;
    ops_.push_back(std::move(op));
}

void GradientTape::backward(const Tensor& loss) {
    if (consumed_) throw Error("backward: tape already consumed");
    if (loss.size() != 1)
        throw ShapeError("backward: loss must be scalar, got shape " + shape_to_string(loss.shape()));
    if (loss.node()->creator != this)
        throw Error("backward: loss tensor is detached from this tape");
    loss.node()->ensure_grad();
    loss.node()->grad[0] = 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        // Outputs whose grad buffer was never touched received no upstream
        // gradient; their local rule would only add zeros.
        if (it->output->grad.empty()) continue;
        if (it->backward) it->backward();
    }
    consumed_ = true;
    ops_.clear();
}

NoGradGuard::NoGradGuard() {
    saved_ = g_active_tape;
    g_active_tape = nullptr;
}

NoGradGuard::~NoGradGuard() {
    g_active_tape = saved_;
}

}  // namespace dstg
