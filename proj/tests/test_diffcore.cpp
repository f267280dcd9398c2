#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dstg/gradcheck.hpp"
#include "dstg/ops.hpp"
#include "dstg/optim.hpp"
#include "dstg/tensor.hpp"

using namespace dstg;

TEST_CASE("forward primitives: relu / matmul / sum-square") {
    Tensor x = Tensor::from_values({3}, {-1.0, 0.0, 2.0});
    Tensor r = ops::relu(x);
    CHECK(r.values() == std::vector<double>{0.0, 0.0, 2.0});

    Tensor eye = Tensor::from_values({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor m = Tensor::from_values({3, 3}, {3, 1, 4, 1, 5, 9, 2, 6, 5});
    Tensor prod = ops::matmul(eye, m);
    for (int i = 0; i < 9; ++i) CHECK(prod.data()[i] == m.data()[i]);

    Tensor v = Tensor::from_values({2}, {3.0, 4.0});
    CHECK(ops::sum(ops::square(v)).item() == doctest::Approx(25.0));
}

TEST_CASE("forward primitives: shape mismatch names the primitive and shapes") {
    Tensor a({2, 3});
    Tensor b({3, 2});
    try {
        ops::add(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("add") != std::string::npos);
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[3x2]") != std::string::npos);
    }
    CHECK_THROWS_AS(ops::matmul(a, a), ShapeError);
    CHECK_THROWS_AS(ops::concat({a, b}, 0), ShapeError);
    CHECK_THROWS_AS(ops::slice(a, 0, 1, 5), ShapeError);
    CHECK_THROWS_AS(ops::reshape(a, {4}), ShapeError);
}

TEST_CASE("backward: linear, quadratic and relu cases") {
    {
        Tensor x = Tensor::from_values({5}, {1, 2, 3, 4, 5}, true);
        GradientTape tape;
        Tensor loss = ops::sum(x);
        tape.backward(loss);
        for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
    }
    {
        Tensor x = Tensor::from_values({2}, {1.0, 2.0}, true);
        GradientTape tape;
        tape.backward(ops::sum(ops::square(x)));
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(4.0));
    }
    {
        Tensor x = Tensor::from_values({2}, {-1.0, 3.0}, true);
        GradientTape tape;
        tape.backward(ops::sum(ops::relu(x)));
        CHECK(x.grad()[0] == doctest::Approx(0.0));
        CHECK(x.grad()[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("backward: errors on non-scalar loss and detached tensors") {
    Tensor x = Tensor::from_values({2}, {1.0, 2.0}, true);
    {
        GradientTape tape;
        Tensor y = ops::square(x);
        CHECK_THROWS_AS(tape.backward(y), ShapeError);
    }
    {
        GradientTape tape;
        Tensor detached = Tensor::scalar(1.0);
        CHECK_THROWS_AS(tape.backward(detached), Error);
    }
}

TEST_CASE("backward: gradients accumulate across shared uses") {
    Tensor x = Tensor::from_values({2}, {3.0, -1.0}, true);
    GradientTape tape;
    Tensor y = ops::add(ops::mul(x, x), x);  // x^2 + x
    tape.backward(ops::sum(y));
    CHECK(x.grad()[0] == doctest::Approx(7.0));   // 2*3 + 1
    CHECK(x.grad()[1] == doctest::Approx(-1.0));  // 2*(-1) + 1
}

TEST_CASE("tape replay is deterministic") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> vals(12);
    for (double& v : vals) v = dist(rng);

    auto run = [&]() {
        Tensor x = Tensor::from_values({3, 4}, vals, true);
        Tensor w = Tensor::from_values({4, 3}, std::vector<double>(vals.begin(), vals.end()), true);
        GradientTape tape;
        Tensor loss = ops::mean(ops::square(ops::matmul(x, w)));
        tape.backward(loss);
        auto g = x.grad();
        auto gw = w.grad();
        g.insert(g.end(), gw.begin(), gw.end());
        return g;
    };
    auto g1 = run();
    auto g2 = run();
    REQUIRE(g1.size() == g2.size());
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);  // bitwise
}

TEST_CASE("sgd momentum: hand-iterated examples") {
    {
        Tensor p = Tensor::from_values({1}, {1.0}, true);
        p.grad()[0] = 2.0;
        SgdMomentum opt(0.1, 0.0);
        opt.register_param(p);
        opt.step();
        CHECK(p.data()[0] == doctest::Approx(0.8));
    }
    {
        Tensor p = Tensor::from_values({1}, {0.0}, true);
        SgdMomentum opt(0.1, 0.9);
        opt.register_param(p);
        p.grad()[0] = 1.0;
        opt.step();
        CHECK(p.data()[0] == doctest::Approx(-0.1));
        p.zero_grad();
        p.grad()[0] = 1.0;
        opt.step();
        CHECK(opt.velocity(0)[0] == doctest::Approx(1.9));
        CHECK(p.data()[0] == doctest::Approx(-0.29));
    }
    {
        Tensor p = Tensor::from_values({3}, {1.0, 2.0, 3.0}, true);
        p.zero_grad();
        SgdMomentum opt(0.5, 0.9);
        opt.register_param(p);
        for (int i = 0; i < 5; ++i) opt.step();
        CHECK(p.values() == std::vector<double>{1.0, 2.0, 3.0});  // zero grad is a fixed point
    }
}

TEST_CASE("sgd momentum: momentum zero reproduces plain sgd bit for bit") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> init(16), grads(16);
    for (double& v : init) v = dist(rng);
    for (double& v : grads) v = dist(rng);

    Tensor p = Tensor::from_values({16}, init, true);
    SgdMomentum opt(0.05, 0.0);
    opt.register_param(p);
    std::vector<double> manual = init;
    for (int s = 0; s < 7; ++s) {
        p.zero_grad();
        for (size_t i = 0; i < grads.size(); ++i) p.grad()[i] = grads[i] * (s + 1);
        opt.step();
        for (size_t i = 0; i < manual.size(); ++i) manual[i] -= 0.05 * (grads[i] * (s + 1));
    }
    for (size_t i = 0; i < manual.size(); ++i) CHECK(p.data()[i] == manual[i]);  // bitwise
}

TEST_CASE("sgd momentum: missing or non-finite grads rejected") {
    Tensor p = Tensor::from_values({2}, {1.0, 2.0}, true);
    SgdMomentum opt(0.1, 0.9);
    {
        Tensor q = Tensor::from_values({2}, {0.0, 0.0});  // never given a grad buffer
        SgdMomentum opt2(0.1, 0.0);
        opt2.register_param(q);
        CHECK_THROWS_AS(opt2.step(), NumericError);
    }
    opt.register_param(p);
    p.grad()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(opt.step(), NumericError);
}

TEST_CASE("grad_check: quadratic and linear functions") {
    Tensor x = Tensor::from_values({3}, {1.0, 2.0, 3.0}, true);
    auto quad = [&x]() { return ops::sum(ops::square(x)); };
    auto res = grad_check(quad, {x}, 1e-5);
    CHECK(res.max_rel_error < 1e-6);

    Tensor y = Tensor::from_values({4}, {0.5, -0.25, 2.0, 7.0}, true);
    auto lin = [&y]() { return ops::sum(y); };
    CHECK(grad_check(lin, {y}, 1e-5).max_rel_error < 1e-9);

    auto vec = [&x]() { return ops::square(x); };
    CHECK_THROWS_AS(grad_check(vec, {x}, 1e-5), ShapeError);
}

TEST_CASE("grad_check: structured primitives (matvec paths, laplacian, convs)") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto rand_tensor = [&](Shape s, bool rg) {
        Tensor t(s, 0.0, rg);
        for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
        return t;
    };

    SUBCASE("spatial_gconv wrt signal, coefficients and laplacian") {
        Tensor x = rand_tensor({2, 3, 4}, true);
        Tensor theta = rand_tensor({2, 3, 3}, true);
        Tensor lap = rand_tensor({4, 4}, true);
        auto fn = [&]() { return ops::mean(ops::square(ops::spatial_gconv(x, theta, lap))); };
        CHECK(grad_check(fn, {x, theta, lap}, 1e-6).max_rel_error < 1e-6);
    }
    SUBCASE("temporal_conv") {
        Tensor z = rand_tensor({2, 5, 3}, true);
        Tensor k = rand_tensor({2, 4, 3}, true);
        auto fn = [&]() { return ops::mean(ops::square(ops::temporal_conv(z, k))); };
        CHECK(grad_check(fn, {z, k}, 1e-6).max_rel_error < 1e-6);
    }
    SUBCASE("conv2d_same with even and odd kernel extents") {
        Tensor x = rand_tensor({2, 4, 4}, true);
        Tensor k14 = rand_tensor({2, 3, 1, 4}, true);
        Tensor k41 = rand_tensor({3, 2, 4, 1}, true);
        auto fn = [&]() { return ops::mean(ops::square(ops::conv2d_same(ops::conv2d_same(x, k14), k41))); };
        CHECK(grad_check(fn, {x, k14, k41}, 1e-6).max_rel_error < 1e-6);
    }
    SUBCASE("normalized_laplacian and symmetrize") {
        Tensor a = rand_tensor({5, 5}, true);
        // keep affinities positive so degrees stay away from zero
        for (std::int64_t i = 0; i < a.size(); ++i) a.data()[i] = 0.2 + 0.5 * std::fabs(a.data()[i]);
        Tensor w = rand_tensor({5, 5}, false);
        auto fn = [&]() {
            return ops::mean(ops::mul(ops::normalized_laplacian(ops::symmetrize(a)), w));
        };
        CHECK(grad_check(fn, {a}, 1e-6).max_rel_error < 1e-6);
    }
    SUBCASE("sigmoid / concat / slice / transpose / bias chain") {
        Tensor a = rand_tensor({3, 4}, true);
        Tensor b = rand_tensor({2, 4}, true);
        Tensor bias = rand_tensor({5}, true);
        auto fn = [&]() {
            Tensor c = ops::concat({a, b}, 0);  // 5x4
            Tensor d = ops::add_channel_bias(ops::sigmoid(c), bias);
            return ops::mean(ops::square(ops::transpose(ops::slice(d, 1, 1, 2))));
        };
        CHECK(grad_check(fn, {a, b, bias}, 1e-6).max_rel_error < 1e-6);
    }
}

// Random compositions of primitives, checked against finite differences.
TEST_CASE("property: compositions of <=5 primitives pass grad_check below 1e-5") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::uniform_int_distribution<int> dim_dist(1, 8);

    for (int trial = 0; trial < 200; ++trial) {
        const int rows = dim_dist(rng), cols = dim_dist(rng);
        // Leaves live on incommensurate grids (k/8 and m/11 with |k| <= 8,
        // |m| <= 10) so no sum or product in the composition can land exactly
        // on, or within the FD step of, the relu kink.
        auto make = [&](int denom, int max_num) {
            Tensor t({rows, cols}, 0.0, true);
            for (std::int64_t i = 0; i < t.size(); ++i) {
                const double u = dist(rng);
                const int num = 1 + static_cast<int>(std::floor(std::fabs(u) * max_num)) % max_num;
                t.data()[i] = (u < 0 ? -1.0 : 1.0) * static_cast<double>(num) / denom;
            }
            return t;
        };
        Tensor a = make(8, 8), b = make(11, 10);
        const int steps = 1 + static_cast<int>(rng() % 5);
        auto build = [&](double* min_relu_in) {
            Tensor cur = a;
            Tensor other = b;
            for (int s = 0; s < steps; ++s) {
                switch ((trial + s) % 6) {
                    case 0: cur = ops::add(cur, other); break;
                    case 1: cur = ops::mul(cur, other); break;
                    case 2:
                        if (min_relu_in)
                            for (std::int64_t i = 0; i < cur.size(); ++i)
                                *min_relu_in = std::min(*min_relu_in, std::fabs(cur.data()[i]));
                        cur = ops::relu(cur);
                        break;
                    case 3: cur = ops::square(ops::scale(cur, 0.5)); break;
                    case 4: cur = ops::sigmoid(cur); break;
                    case 5: cur = ops::scale(ops::matmul(cur, ops::transpose(other)), 0.25);
                            cur = ops::matmul(cur, other); break;
                }
            }
            return ops::mean(cur);
        };
        // Finite differences are only a valid oracle away from the relu kink;
        // skip compositions whose relu input comes within a few FD steps of it.
        double min_relu_in = 1.0;
        {
            NoGradGuard ng;
            build(&min_relu_in);
        }
        if (min_relu_in < 1e-4) continue;
        auto fn = [&]() { return build(nullptr); };
        auto res = grad_check(fn, {a, b}, 1e-5, {}, 1e-9);
        CAPTURE(trial);
        CHECK(res.max_rel_error < 1e-5);
    }
}

TEST_CASE("values stay finite through forward and backward") {
    Tensor x = Tensor::from_values({3}, {1.0, -2.0, 0.5}, true);
    GradientTape tape;
    Tensor loss = ops::mean(ops::square(ops::sigmoid(x)));
    CHECK(loss.all_finite());
    tape.backward(loss);
    for (double g : x.grad()) CHECK(std::isfinite(g));
}
