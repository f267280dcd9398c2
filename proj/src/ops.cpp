#include "dstg/ops.hpp"

#include <cmath>
#include <cstring>
#include <utility>

namespace dstg::ops {

namespace {

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (!GradientTape::active()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

void record_op(std::string name, std::vector<Tensor> inputs, Tensor& out, std::function<void()> backward) {
    out.set_requires_grad(true);
    GradientTape::Op op;
    op.name = std::move(name);
    for (const Tensor& t : inputs) op.inputs.push_back(t.handle());
    op.output = out.handle();
    op.backward = std::move(backward);
    GradientTape::active()->record(std::move(op));
}

void check_same_shape(const char* prim, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(prim) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
}

void check_rank(const char* prim, const Tensor& t, int rank) {
    if (t.rank() != rank)
        throw ShapeError(std::string(prim) + ": expected rank-" + std::to_string(rank) + " tensor, got " +
                         shape_to_string(t.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    if (should_record({&a, &b})) {
        auto an = a.handle(), bn = b.handle(), on = out.handle();
        record_op("add", {a, b}, out, [an, bn, on] {
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) bn->grad[i] += on->grad[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    if (should_record({&a, &b})) {
        auto an = a.handle(), bn = b.handle(), on = out.handle();
        record_op("sub", {a, b}, out, [an, bn, on] {
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) bn->grad[i] -= on->grad[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    if (should_record({&a, &b})) {
        auto an = a.handle(), bn = b.handle(), on = out.handle();
        record_op("mul", {a, b}, out, [an, bn, on] {
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i] * bn->values[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i) bn->grad[i] += on->grad[i] * an->values[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("scale", {a}, out, [an, on, c] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i] * c;
        });
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank("matmul", a, 2);
    check_rank("matmul", b, 2);
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner extents differ, " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (int i = 0; i < m; ++i) {
        double* orow = po + static_cast<std::int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = pa[static_cast<std::int64_t>(i) * k + p];
            const double* brow = pb + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    if (should_record({&a, &b})) {
        auto an = a.handle(), bn = b.handle(), on = out.handle();
        record_op("matmul", {a, b}, out, [an, bn, on, m, k, n] {
            const double* g = on->grad.data();
            if (an->requires_grad) {
                an->ensure_grad();
                double* ga = an->grad.data();
                const double* pb2 = bn->values.data();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* grow = g + static_cast<std::int64_t>(i) * n;
                        const double* brow = pb2 + static_cast<std::int64_t>(p) * n;
                        for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        ga[static_cast<std::int64_t>(i) * k + p] += acc;
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                double* gb = bn->grad.data();
                const double* pa2 = an->values.data();
                for (int i = 0; i < m; ++i) {
                    const double* grow = g + static_cast<std::int64_t>(i) * n;
                    for (int p = 0; p < k; ++p) {
                        const double av = pa2[static_cast<std::int64_t>(i) * k + p];
                        double* gbrow = gb + static_cast<std::int64_t>(p) * n;
                        for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("relu", {a}, out, [an, on] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i)
                if (an->values[i] > 0.0) an->grad[i] += on->grad[i];
        });
    }
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = 1.0 / (1.0 + std::exp(-pa[i]));
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("sigmoid", {a}, out, [an, on] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i) {
                const double y = on->values[i];
                an->grad[i] += on->grad[i] * y * (1.0 - y);
            }
        });
    }
    return out;
}

Tensor abs(const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = std::fabs(pa[i]);
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("abs", {a}, out, [an, on] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i) {
                const double x = an->values[i];
                if (x > 0.0)
                    an->grad[i] += on->grad[i];
                else if (x < 0.0)
                    an->grad[i] -= on->grad[i];
            }
        });
    }
    return out;
}

Tensor square(const Tensor& a) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pa[i];
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("square", {a}, out, [an, on] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i] * 2.0 * an->values[i];
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    const double* pa = a.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) acc += pa[i];
    Tensor out = Tensor::scalar(acc);
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("sum", {a}, out, [an, on] {
            an->ensure_grad();
            const double g = on->grad[0];
            for (double& gi : an->grad) gi += g;
        });
    }
    return out;
}

Tensor mean(const Tensor& a) {
    double acc = 0.0;
    const double* pa = a.data();
    const std::int64_t n = a.size();
    for (std::int64_t i = 0; i < n; ++i) acc += pa[i];
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        const double inv = 1.0 / static_cast<double>(n);
        record_op("mean", {a}, out, [an, on, inv] {
            an->ensure_grad();
            const double g = on->grad[0] * inv;
            for (double& gi : an->grad) gi += g;
        });
    }
    return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size())
        throw ShapeError("reshape: " + shape_to_string(a.shape()) + " to " + shape_to_string(shape) +
                         " changes element count");
    Tensor out = Tensor::from_values(std::move(shape), a.values());
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("reshape", {a}, out, [an, on] {
            an->ensure_grad();
            const std::int64_t m = static_cast<std::int64_t>(on->values.size());
            for (std::int64_t i = 0; i < m; ++i) an->grad[i] += on->grad[i];
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    check_rank("transpose", a, 2);
    const int m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    const double* pa = a.data();
    double* po = out.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) po[static_cast<std::int64_t>(j) * m + i] = pa[static_cast<std::int64_t>(i) * n + j];
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("transpose", {a}, out, [an, on, m, n] {
            an->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<std::int64_t>(i) * n + j] += on->grad[static_cast<std::int64_t>(j) * m + i];
        });
    }
    return out;
}

namespace {

// Strides for slicing/concatenation along one axis: treat the tensor as
// [outer, axis_extent, inner].
struct AxisView {
    std::int64_t outer, extent, inner;
};

AxisView axis_view(const Shape& s, int axis) {
    AxisView v{1, s[static_cast<size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) v.outer *= s[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

}  // namespace

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& s0 = parts[0].shape();
    if (axis < 0 || axis >= static_cast<int>(s0.size()))
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " + shape_to_string(s0));
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != parts[0].rank())
            throw ShapeError("concat: rank mismatch " + shape_to_string(s0) + " vs " + shape_to_string(p.shape()));
        for (int d = 0; d < p.rank(); ++d)
            if (d != axis && p.dim(d) != s0[static_cast<size_t>(d)])
                throw ShapeError("concat: shape mismatch off-axis " + shape_to_string(s0) + " vs " +
                                 shape_to_string(p.shape()));
        total += p.dim(axis);
    }
    Shape out_shape = s0;
    out_shape[static_cast<size_t>(axis)] = total;
    Tensor out(out_shape);
    const AxisView ov = axis_view(out_shape, axis);
    double* po = out.data();
    std::int64_t offset = 0;
    for (const Tensor& p : parts) {
        const AxisView pv = axis_view(p.shape(), axis);
        const double* pp = p.data();
        for (std::int64_t o = 0; o < pv.outer; ++o)
            std::memcpy(po + (o * ov.extent + offset) * ov.inner, pp + o * pv.extent * pv.inner,
                        static_cast<size_t>(pv.extent * pv.inner) * sizeof(double));
        offset += pv.extent;
    }
    bool any_grad = false;
    for (const Tensor& p : parts)
        if (p.requires_grad()) any_grad = true;
    if (GradientTape::active() && any_grad) {
        auto on = out.handle();
        std::vector<std::shared_ptr<TensorData>> handles;
        for (const Tensor& p : parts) handles.push_back(p.handle());
        record_op("concat", parts, out, [handles, on, ov, axis] {
            std::int64_t offset2 = 0;
            for (const auto& h : handles) {
                const AxisView pv = axis_view(h->shape, axis);
                if (h->requires_grad) {
                    h->ensure_grad();
                    for (std::int64_t o = 0; o < pv.outer; ++o) {
                        const double* gsrc = on->grad.data() + (o * ov.extent + offset2) * ov.inner;
                        double* gdst = h->grad.data() + o * pv.extent * pv.inner;
                        const std::int64_t cnt = pv.extent * pv.inner;
                        for (std::int64_t i = 0; i < cnt; ++i) gdst[i] += gsrc[i];
                    }
                }
                offset2 += pv.extent;
            }
        });
    }
    return out;
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
    const Shape& s = a.shape();
    if (axis < 0 || axis >= a.rank())
        throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for " + shape_to_string(s));
    if (start < 0 || len <= 0 || start + len > s[static_cast<size_t>(axis)])
        throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                         ") invalid for " + shape_to_string(s));
    Shape out_shape = s;
    out_shape[static_cast<size_t>(axis)] = len;
    Tensor out(out_shape);
    const AxisView av = axis_view(s, axis);
    double* po = out.data();
    const double* pa = a.data();
    for (std::int64_t o = 0; o < av.outer; ++o)
        std::memcpy(po + o * len * av.inner, pa + (o * av.extent + start) * av.inner,
                    static_cast<size_t>(len * av.inner) * sizeof(double));
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("slice", {a}, out, [an, on, av, start, len] {
            an->ensure_grad();
            for (std::int64_t o = 0; o < av.outer; ++o) {
                const double* gsrc = on->grad.data() + o * len * av.inner;
                double* gdst = an->grad.data() + (o * av.extent + start) * av.inner;
                const std::int64_t cnt = static_cast<std::int64_t>(len) * av.inner;
                for (std::int64_t i = 0; i < cnt; ++i) gdst[i] += gsrc[i];
            }
        });
    }
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    if (x.rank() < 1 || bias.rank() != 1 || bias.dim(0) != x.dim(0))
        throw ShapeError("add_channel_bias: bias " + shape_to_string(bias.shape()) + " does not match leading axis of " +
                         shape_to_string(x.shape()));
    const int c = x.dim(0);
    const std::int64_t inner = x.size() / c;
    Tensor out(x.shape());
    const double* px = x.data();
    const double* pb = bias.data();
    double* po = out.data();
    for (int i = 0; i < c; ++i) {
        const double b = pb[i];
        const double* row = px + i * inner;
        double* orow = po + i * inner;
        for (std::int64_t j = 0; j < inner; ++j) orow[j] = row[j] + b;
    }
    if (should_record({&x, &bias})) {
        auto xn = x.handle(), bn = bias.handle(), on = out.handle();
        record_op("add_channel_bias", {x, bias}, out, [xn, bn, on, c, inner] {
            if (xn->requires_grad) {
                xn->ensure_grad();
                const std::int64_t m = static_cast<std::int64_t>(on->values.size());
                for (std::int64_t i = 0; i < m; ++i) xn->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (int i = 0; i < c; ++i) {
                    double acc = 0.0;
                    const double* grow = on->grad.data() + i * inner;
                    for (std::int64_t j = 0; j < inner; ++j) acc += grow[j];
                    bn->grad[i] += acc;
                }
            }
        });
    }
    return out;
}

Tensor spatial_gconv(const Tensor& x, const Tensor& theta, const Tensor& laplacian) {
    check_rank("spatial_gconv", x, 3);
    check_rank("spatial_gconv", theta, 3);
    check_rank("spatial_gconv", laplacian, 2);
    const int c = x.dim(0), t = x.dim(1), n = x.dim(2);
    const int k = theta.dim(2);
    if (theta.dim(0) != c || theta.dim(1) != t)
        throw ShapeError("spatial_gconv: theta " + shape_to_string(theta.shape()) + " does not match signal " +
                         shape_to_string(x.shape()));
    if (laplacian.dim(0) != n || laplacian.dim(1) != n)
        throw ShapeError("spatial_gconv: laplacian " + shape_to_string(laplacian.shape()) + " does not match node axis of " +
                         shape_to_string(x.shape()));
    if (k < 1) throw ShapeError("spatial_gconv: polynomial order must be >= 1");

    const bool rec = should_record({&x, &theta, &laplacian});
    Tensor out({c, t, n});
    // Krylov vectors y_k = L^k x[c,t,:], kept for the backward pass.
    auto krylov = std::make_shared<std::vector<double>>();
    if (rec) krylov->resize(static_cast<size_t>(c) * t * k * n);

    const double* px = x.data();
    const double* pth = theta.data();
    const double* pl = laplacian.data();
    double* po = out.data();
    std::vector<double> cur(static_cast<size_t>(n)), next(static_cast<size_t>(n));
    for (int ci = 0; ci < c; ++ci) {
        for (int ti = 0; ti < t; ++ti) {
            const std::int64_t base = (static_cast<std::int64_t>(ci) * t + ti) * n;
            const double* th = pth + (static_cast<std::int64_t>(ci) * t + ti) * k;
            std::memcpy(cur.data(), px + base, static_cast<size_t>(n) * sizeof(double));
            double* orow = po + base;
            for (int i = 0; i < n; ++i) orow[i] = th[0] * cur[i];
            if (rec)
                std::memcpy(krylov->data() + ((static_cast<std::int64_t>(ci) * t + ti) * k) * n, cur.data(),
                            static_cast<size_t>(n) * sizeof(double));
            for (int kk = 1; kk < k; ++kk) {
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    const double* lrow = pl + static_cast<std::int64_t>(i) * n;
                    for (int j = 0; j < n; ++j) acc += lrow[j] * cur[j];
                    next[i] = acc;
                }
                std::swap(cur, next);
                const double thk = th[kk];
                for (int i = 0; i < n; ++i) orow[i] += thk * cur[i];
                if (rec)
                    std::memcpy(krylov->data() + ((static_cast<std::int64_t>(ci) * t + ti) * k + kk) * n, cur.data(),
                                static_cast<size_t>(n) * sizeof(double));
            }
        }
    }

    if (rec) {
        auto xn = x.handle(), thn = theta.handle(), ln = laplacian.handle(), on = out.handle();
        record_op("spatial_gconv", {x, theta, laplacian}, out, [xn, thn, ln, on, krylov, c, t, n, k] {
            const double* pl2 = ln->values.data();
            std::vector<double> gk(static_cast<size_t>(n)), gprev(static_cast<size_t>(n));
            const bool need_x = xn->requires_grad;
            const bool need_th = thn->requires_grad;
            const bool need_l = ln->requires_grad;
            if (need_x) xn->ensure_grad();
            if (need_th) thn->ensure_grad();
            if (need_l) ln->ensure_grad();
            for (int ci = 0; ci < c; ++ci) {
                for (int ti = 0; ti < t; ++ti) {
                    const std::int64_t base = (static_cast<std::int64_t>(ci) * t + ti) * n;
                    const double* g = on->grad.data() + base;
                    const double* th = thn->values.data() + (static_cast<std::int64_t>(ci) * t + ti) * k;
                    const double* ys = krylov->data() + ((static_cast<std::int64_t>(ci) * t + ti) * k) * n;
                    if (need_th) {
                        double* gth = thn->grad.data() + (static_cast<std::int64_t>(ci) * t + ti) * k;
                        for (int kk = 0; kk < k; ++kk) {
                            double acc = 0.0;
                            const double* yk = ys + static_cast<std::int64_t>(kk) * n;
                            for (int i = 0; i < n; ++i) acc += g[i] * yk[i];
                            gth[kk] += acc;
                        }
                    }
                    if (need_x || need_l) {
                        // Reverse the recurrence y_k = L y_{k-1}:
                        //   g_{K-1} = th_{K-1} g;  g_{k-1} = L^T g_k + th_{k-1} g
                        for (int i = 0; i < n; ++i) gk[i] = th[k - 1] * g[i];
                        for (int kk = k - 1; kk >= 1; --kk) {
                            const double* yprev = ys + static_cast<std::int64_t>(kk - 1) * n;
                            if (need_l) {
                                double* gl = ln->grad.data();
                                for (int i = 0; i < n; ++i) {
                                    const double gi = gk[i];
                                    if (gi == 0.0) continue;
                                    double* glrow = gl + static_cast<std::int64_t>(i) * n;
                                    for (int j = 0; j < n; ++j) glrow[j] += gi * yprev[j];
                                }
                            }
                            for (int j = 0; j < n; ++j) {
                                double acc = 0.0;
                                for (int i = 0; i < n; ++i) acc += pl2[static_cast<std::int64_t>(i) * n + j] * gk[i];
                                gprev[j] = acc + th[kk - 1] * g[j];
                            }
                            std::swap(gk, gprev);
                        }
                        if (need_x) {
                            double* gx = xn->grad.data() + base;
                            for (int i = 0; i < n; ++i) gx[i] += gk[i];
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor temporal_conv(const Tensor& z, const Tensor& kernel) {
    check_rank("temporal_conv", z, 3);
    check_rank("temporal_conv", kernel, 3);
    const int cin = z.dim(0), t = z.dim(1), n = z.dim(2);
    if (kernel.dim(0) != cin)
        throw ShapeError("temporal_conv: kernel " + shape_to_string(kernel.shape()) + " input channels do not match " +
                         shape_to_string(z.shape()));
    const int cout = kernel.dim(1), q = kernel.dim(2);
    if (q % 2 == 0)
        throw ShapeError("temporal_conv: window size must be odd for symmetric same-padding, kernel " +
                         shape_to_string(kernel.shape()));
    const int pad = (q - 1) / 2;
    Tensor out({cout, t, n});
    const double* pz = z.data();
    const double* pk = kernel.data();
    double* po = out.data();
    for (int co = 0; co < cout; ++co) {
        for (int ti = 0; ti < t; ++ti) {
            double* orow = po + (static_cast<std::int64_t>(co) * t + ti) * n;
            for (int ci = 0; ci < cin; ++ci) {
                const double* krow = pk + (static_cast<std::int64_t>(ci) * cout + co) * q;
                for (int qi = 0; qi < q; ++qi) {
                    const int src = ti + qi - pad;
                    if (src < 0 || src >= t) continue;
                    const double kv = krow[qi];
                    if (kv == 0.0) continue;
                    const double* zrow = pz + (static_cast<std::int64_t>(ci) * t + src) * n;
                    for (int i = 0; i < n; ++i) orow[i] += kv * zrow[i];
                }
            }
        }
    }
    if (should_record({&z, &kernel})) {
        auto zn = z.handle(), kn = kernel.handle(), on = out.handle();
        record_op("temporal_conv", {z, kernel}, out, [zn, kn, on, cin, cout, t, n, q, pad] {
            const bool need_z = zn->requires_grad;
            const bool need_k = kn->requires_grad;
            if (need_z) zn->ensure_grad();
            if (need_k) kn->ensure_grad();
            for (int co = 0; co < cout; ++co) {
                for (int ti = 0; ti < t; ++ti) {
                    const double* grow = on->grad.data() + (static_cast<std::int64_t>(co) * t + ti) * n;
                    for (int ci = 0; ci < cin; ++ci) {
                        for (int qi = 0; qi < q; ++qi) {
                            const int src = ti + qi - pad;
                            if (src < 0 || src >= t) continue;
                            const std::int64_t zoff = (static_cast<std::int64_t>(ci) * t + src) * n;
                            const std::int64_t koff = (static_cast<std::int64_t>(ci) * cout + co) * q + qi;
                            if (need_z) {
                                const double kv = kn->values[koff];
                                double* gz = zn->grad.data() + zoff;
                                for (int i = 0; i < n; ++i) gz[i] += kv * grow[i];
                            }
                            if (need_k) {
                                double acc = 0.0;
                                const double* zrow = zn->values.data() + zoff;
                                for (int i = 0; i < n; ++i) acc += grow[i] * zrow[i];
                                kn->grad[koff] += acc;
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor conv2d_same(const Tensor& x, const Tensor& kernel) {
    check_rank("conv2d_same", x, 3);
    check_rank("conv2d_same", kernel, 4);
    const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (kernel.dim(0) != cin)
        throw ShapeError("conv2d_same: kernel " + shape_to_string(kernel.shape()) + " input channels do not match " +
                         shape_to_string(x.shape()));
    const int cout = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    const int pt = (kh - 1) / 2, plft = (kw - 1) / 2;
    Tensor out({cout, h, w});
    const double* px = x.data();
    const double* pk = kernel.data();
    double* po = out.data();
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            const double* kbase = pk + ((static_cast<std::int64_t>(ci) * cout + co) * kh) * kw;
            for (int y = 0; y < h; ++y) {
                double* orow = po + (static_cast<std::int64_t>(co) * h + y) * w;
                for (int ky = 0; ky < kh; ++ky) {
                    const int sy = y + ky - pt;
                    if (sy < 0 || sy >= h) continue;
                    const double* xrow = px + (static_cast<std::int64_t>(ci) * h + sy) * w;
                    const double* krow = kbase + static_cast<std::int64_t>(ky) * kw;
                    for (int kx = 0; kx < kw; ++kx) {
                        const double kv = krow[kx];
                        if (kv == 0.0) continue;
                        const int x0 = std::max(0, plft - kx);
                        const int x1 = std::min(w, w + plft - kx);
                        const double* xs = xrow + (x0 + kx - plft);
                        for (int xi = x0; xi < x1; ++xi) orow[xi] += kv * *xs++;
                    }
                }
            }
        }
    }
    if (should_record({&x, &kernel})) {
        auto xn = x.handle(), kn = kernel.handle(), on = out.handle();
        record_op("conv2d_same", {x, kernel}, out, [xn, kn, on, cin, cout, h, w, kh, kw, pt, plft] {
            const bool need_x = xn->requires_grad;
            const bool need_k = kn->requires_grad;
            if (need_x) xn->ensure_grad();
            if (need_k) kn->ensure_grad();
            for (int co = 0; co < cout; ++co) {
                for (int ci = 0; ci < cin; ++ci) {
                    const std::int64_t kbase = ((static_cast<std::int64_t>(ci) * cout + co) * kh) * kw;
                    for (int y = 0; y < h; ++y) {
                        const double* grow = on->grad.data() + (static_cast<std::int64_t>(co) * h + y) * w;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int sy = y + ky - pt;
                            if (sy < 0 || sy >= h) continue;
                            const std::int64_t xoff = (static_cast<std::int64_t>(ci) * h + sy) * w;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int x0 = std::max(0, plft - kx);
                                const int x1 = std::min(w, w + plft - kx);
                                if (x0 >= x1) continue;
                                const std::int64_t koff = kbase + static_cast<std::int64_t>(ky) * kw + kx;
                                if (need_x) {
                                    const double kv = kn->values[koff];
                                    double* gx = xn->grad.data() + xoff + (x0 + kx - plft);
                                    const double* gs = grow + x0;
                                    for (int xi = x0; xi < x1; ++xi) *gx++ += kv * *gs++;
                                }
                                if (need_k) {
                                    double acc = 0.0;
                                    const double* xs = xn->values.data() + xoff + (x0 + kx - plft);
                                    const double* gs = grow + x0;
                                    for (int xi = x0; xi < x1; ++xi) acc += *gs++ * *xs++;
                                    kn->grad[koff] += acc;
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor normalized_laplacian(const Tensor& affinity) {
    check_rank("normalized_laplacian", affinity, 2);
    const int n = affinity.dim(0);
    if (affinity.dim(1) != n)
        throw ShapeError("normalized_laplacian: matrix must be square, got " + shape_to_string(affinity.shape()));
    const double* pa = affinity.data();
    // s_i = D_ii^{-1/2}, with s_i = 0 standing in for the zero-degree guard
    // (it zeroes the whole row/column, leaving L_ii = 1).
    auto sinv = std::make_shared<std::vector<double>>(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double d = 0.0;
        for (int j = 0; j < n; ++j) d += pa[static_cast<std::int64_t>(i) * n + j];
        (*sinv)[static_cast<size_t>(i)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    Tensor out({n, n});
    double* po = out.data();
    for (int i = 0; i < n; ++i) {
        const double si = (*sinv)[static_cast<size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const double v = -si * pa[static_cast<std::int64_t>(i) * n + j] * (*sinv)[static_cast<size_t>(j)];
            po[static_cast<std::int64_t>(i) * n + j] = (i == j) ? 1.0 + v : v;
        }
    }
    if (should_record({&affinity})) {
        auto an = affinity.handle(), on = out.handle();
        record_op("normalized_laplacian", {affinity}, out, [an, on, sinv, n] {
            an->ensure_grad();
            const double* g = on->grad.data();
            const double* pa2 = an->values.data();
            const double* s = sinv->data();
            // dL_ij/dA_pq = -(delta_ip delta_jq s_p s_q) + row/column terms from
            // the degrees: grad_A[p,q] = -G_pq s_p s_q + r_p/2 + c_q/2 with
            // r_p = s_p^3 sum_j G_pj A_pj s_j and c_q symmetric.
            std::vector<double> r(static_cast<size_t>(n), 0.0), c(static_cast<size_t>(n), 0.0);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double gaij = g[static_cast<std::int64_t>(i) * n + j] * pa2[static_cast<std::int64_t>(i) * n + j];
                    r[static_cast<size_t>(i)] += gaij * s[j];
                    c[static_cast<size_t>(j)] += gaij * s[i];
                }
            }
            for (int i = 0; i < n; ++i) {
                r[static_cast<size_t>(i)] *= s[i] * s[i] * s[i];
                c[static_cast<size_t>(i)] *= s[i] * s[i] * s[i];
            }
            double* ga = an->grad.data();
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                    ga[static_cast<std::int64_t>(p) * n + q] +=
                        -g[static_cast<std::int64_t>(p) * n + q] * s[p] * s[q] +
                        0.5 * (r[static_cast<size_t>(p)] + c[static_cast<size_t>(q)]);
        });
    }
    return out;
}

Tensor symmetrize(const Tensor& a) {
    check_rank("symmetrize", a, 2);
    const int n = a.dim(0);
    if (a.dim(1) != n) throw ShapeError("symmetrize: matrix must be square, got " + shape_to_string(a.shape()));
    Tensor out({n, n});
    const double* pa = a.data();
    double* po = out.data();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            po[static_cast<std::int64_t>(i) * n + j] =
                0.5 * (pa[static_cast<std::int64_t>(i) * n + j] + pa[static_cast<std::int64_t>(j) * n + i]);
    if (should_record({&a})) {
        auto an = a.handle(), on = out.handle();
        record_op("symmetrize", {a}, out, [an, on, n] {
            an->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    an->grad[static_cast<std::int64_t>(i) * n + j] +=
                        0.5 * (on->grad[static_cast<std::int64_t>(i) * n + j] +
                               on->grad[static_cast<std::int64_t>(j) * n + i]);
        });
    }
    return out;
}

}  // namespace dstg::ops
