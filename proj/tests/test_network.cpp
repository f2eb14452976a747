// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pairedit/gradcheck.hpp"
#include "pairedit/network.hpp"

using namespace pairedit;
using pairedit::testing::naive_matmul;
using pairedit::testing::random_adapter;
using pairedit::testing::tiny_shape;

namespace {

// Loop-level reference: dense merged weights W + sum s B A, tanh between layers.
Tensor reference_forward(const DenoiserParams& base, const std::vector<std::pair<const LoraAdapter*, double>>& adapters,
                         const Tensor& x, double t) {
    const std::size_t k = base.shape().fourier_k;
    std::vector<double> h(x.data().begin(), x.data().end());
    for (std::size_t j = 1; j <= k; ++j) {
        h.push_back(std::sin(2.0 * std::numbers::pi * j * t));
        h.push_back(std::cos(2.0 * std::numbers::pi * j * t));
    }
    for (std::size_t li = 0; li < base.layers().size(); ++li) {
        Tensor w = base.layers()[li].weight;
        for (const auto& [a, s] : adapters) {
            w = add(w, scale(naive_matmul(a->layers[li].up, a->layers[li].down), s));
        }
        std::vector<double> z(w.dim(0));
        for (std::size_t o = 0; o < w.dim(0); ++o) {
            double acc = base.layers()[li].bias[o];
            for (std::size_t i = 0; i < w.dim(1); ++i) acc += w(o, i) * h[i];
            z[o] = li + 1 < base.layers().size() ? std::tanh(acc) : acc;
        }
        h = z;
    }
    return Tensor({h.size()}, h);
}

struct NetFixture : ::testing::Test {
    RngState rng{11};
    DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape());
};

}  // namespace

TEST(Network, TimeFeatures) {
    const double t[] = {0.25};
    const Tensor f = time_features(t, 2);
    ASSERT_EQ(f.shape(), (Shape{1, 4}));
    EXPECT_NEAR(f(0, 0), 1.0, 1e-15);  // sin(pi/2)
    EXPECT_NEAR(f(0, 1), 0.0, 1e-15);
    EXPECT_NEAR(f(0, 2), 0.0, 1e-15);  // sin(pi)
    EXPECT_NEAR(f(0, 3), -1.0, 1e-15);
}

TEST_F(NetFixture, ForwardMatchesReferenceWithAdapters) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    LoraAdapter b = random_adapter(rng, base, 3);
    b.scale = 0.7;
    const Tensor x = gauss(rng, {3});
    AdapterStack stack{&a, &b};
    stack[0].scale_override = -1.5;
    const Tensor got = predict_noise(base, stack, x, 0.3);
    const Tensor want = reference_forward(base, {{&a, -1.5}, {&b, 0.7}}, x, 0.3);
    EXPECT_LT(max_abs_diff(got, want), 1e-12);
    EXPECT_EQ(got.shape(), x.shape());
}

TEST_F(NetFixture, BatchRowsMatchSingleCalls) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    const Tensor x = gauss(rng, {4, 3});
    const std::vector<double> t{0.1, 0.4, 0.6, 1.0};
    const Tensor batch = predict_noise(base, AdapterStack{&a}, x, t);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(batch.row_copy(i), predict_noise(base, AdapterStack{&a}, x.row_copy(i), t[i]));
    }
}

TEST_F(NetFixture, FreshAdapterAndZeroScaleAreExactNoOps) {
    const Tensor x = gauss(rng, {5, 3});
    const std::vector<double> t{0.0, 0.2, 0.5, 0.8, 1.0};
    const Tensor plain = predict_noise(base, AdapterStack{}, x, t);
    const LoraAdapter fresh = init_adapter(rng, base, 2, 0.1);
    EXPECT_EQ(predict_noise(base, AdapterStack{&fresh}, x, t), plain);

    const LoraAdapter a = random_adapter(rng, base, 2);
    AdapterStack zero{&a};
    zero[0].scale_override = 0.0;
    AdapterStack inactive{&a};
    inactive[0].active = false;
    EXPECT_EQ(predict_noise(base, zero, x, t), plain);
    EXPECT_EQ(predict_noise(base, inactive, x, t), plain);
    LoraAdapter zero_scale = a;
    zero_scale.scale = 0.0;
    EXPECT_EQ(predict_noise(base, AdapterStack{&zero_scale}, x, t), plain);
}

TEST(Network, LayerDeltaIsLinearInScale) {
    // Adapter on the output layer only: the output delta scales exactly with s.
    RngState rng(5);
    const DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape(3, 4, 1, 1));
    LoraAdapter a = random_adapter(rng, base, 2);
    for (std::size_t l = 0; l + 1 < a.layers.size(); ++l) a.layers[l].up = Tensor(a.layers[l].up.shape());
    const Tensor x = gauss(rng, {3});
    const Tensor plain = predict_noise(base, AdapterStack{}, x, 0.5);
    a.scale = 1.0;
    const Tensor d1 = sub(predict_noise(base, AdapterStack{&a}, x, 0.5), plain);
    a.scale = 2.5;
    const Tensor d2 = sub(predict_noise(base, AdapterStack{&a}, x, 0.5), plain);
    EXPECT_LT(max_abs_diff(scale(d1, 2.5), d2), 1e-13);
}

TEST_F(NetFixture, RejectsBadInputs) {
    EXPECT_THROW(predict_noise(base, AdapterStack{}, Tensor::vector({1, 2}), 0.5), std::invalid_argument);
    EXPECT_THROW(predict_noise(base, AdapterStack{}, Tensor::vector({1, 2, 3}), 1.5), std::invalid_argument);
    EXPECT_THROW(init_adapter(rng, base, 0, 0.1), std::invalid_argument);
    EXPECT_THROW(init_adapter(rng, base, 4, 0.1), std::invalid_argument);  // output layer is 3 wide
    const DenoiserParams other = DenoiserParams::initialize(rng, tiny_shape(3, 8));
    const LoraAdapter wrong = init_adapter(rng, other, 2, 0.1);
    EXPECT_THROW(predict_noise(base, AdapterStack{&wrong}, Tensor::vector({1, 2, 3}), 0.5), std::invalid_argument);
}

TEST(Network, Rank16AcceptedOnWideLayers) {
    RngState rng(1);
    const DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape(16, 32));
    EXPECT_EQ(init_adapter(rng, base, 16, 0.1).rank(), 16u);
}

TEST_F(NetFixture, FreshAdapterStructure) {
    const LoraAdapter a = init_adapter(rng, base, 2, 0.1);
    ASSERT_EQ(a.layers.size(), base.layers().size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        EXPECT_EQ(a.layers[i].down.shape(), (Shape{2, base.layers()[i].in_features()}));
        EXPECT_EQ(a.layers[i].up.shape(), (Shape{base.layers()[i].out_features(), 2}));
        for (double v : a.layers[i].up.data()) EXPECT_EQ(v, 0.0);
    }
    EXPECT_DOUBLE_EQ(a.scale, 1.0);
}

TEST_F(NetFixture, FlattenAssignRoundTrip) {
    LoraAdapter a = random_adapter(rng, base, 2);
    const Tensor flat = flatten(a);
    LoraAdapter b = init_adapter(rng, base, 2, 0.1);
    assign_flat(b, flat);
    EXPECT_EQ(flatten(b), flat);
    EXPECT_THROW(assign_flat(b, Tensor::vector({1.0})), std::invalid_argument);
}

TEST_F(NetFixture, AdapterGradientsMatchFiniteDifferences) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    LoraAdapter b = random_adapter(rng, base, 2);
    b.scale = 0.6;
    const Tensor x = gauss(rng, {3, 3});
    const std::vector<double> t{0.2, 0.5, 0.9};
    const Tensor g_out = gauss(rng, {3, 3});
    const AdapterStack stack{&a, &b};
    const std::size_t trainable[] = {1};
    const auto grads = backprop_adapters(base, stack, x, t, g_out, trainable);
    ASSERT_EQ(grads.size(), 1u);
    const auto f = [&](const Tensor& flat) {
        LoraAdapter probe = b;
        assign_flat(probe, flat);
        return dot(predict_noise(base, AdapterStack{&a, &probe}, x, t), g_out);
    };
    EXPECT_LT(relative_error(flatten(grads[0]), finite_diff_grad(f, flatten(b), 1e-6)), 1e-7);
}

TEST_F(NetFixture, GradientScalesLinearlyWithAdapterScale) {
    LoraAdapter a = random_adapter(rng, base, 2);
    for (std::size_t l = 0; l + 1 < a.layers.size(); ++l) a.layers[l].up = Tensor(a.layers[l].up.shape());
    const Tensor x = gauss(rng, {2, 3});
    const std::vector<double> t{0.3, 0.7};
    const Tensor g_out = gauss(rng, {2, 3});
    const std::size_t trainable[] = {0};
    // Output layer B gradient: s * G^T (h A^T), linear in s.
    const auto up_grad = [&](double s) {
        AdapterStack stack{&a};
        stack[0].scale_override = s;
        return backprop_adapters(base, stack, x, t, g_out, trainable)[0].back().up;
    };
    const Tensor g1 = up_grad(1.0);
    EXPECT_LT(max_abs_diff(up_grad(3.0), scale(g1, 3.0)), 1e-12);
    const Tensor g0 = up_grad(0.0);
    for (double v : g0.data()) EXPECT_EQ(v, 0.0);
}

TEST_F(NetFixture, BaseAndInputGradients) {
    const Tensor x = gauss(rng, {2, 3});
    const std::vector<double> t{0.3, 0.7};
    const Tensor g_out = gauss(rng, {2, 3});
    const auto lin = backprop_base(base, x, t, g_out);
    for (std::size_t li = 0; li < lin.size(); ++li) {
        const auto f = [&](const Tensor& w) {
            std::vector<Linear> layers(base.layers().begin(), base.layers().end());
            layers[li].weight = w.reshaped(layers[li].weight.shape());
            return dot(predict_noise(DenoiserParams(base.shape(), layers), AdapterStack{}, x, t), g_out);
        };
        const Tensor w = base.layers()[li].weight;
        EXPECT_LT(relative_error(lin[li].weight, finite_diff_grad(f, w, 1e-6).reshaped(w.shape())), 1e-7);
        const auto fb = [&](const Tensor& b) {
            std::vector<Linear> layers(base.layers().begin(), base.layers().end());
            layers[li].bias = b;
            return dot(predict_noise(DenoiserParams(base.shape(), layers), AdapterStack{}, x, t), g_out);
        };
        EXPECT_LT(relative_error(lin[li].bias, finite_diff_grad(fb, base.layers()[li].bias, 1e-6)), 1e-7);
    }
    const ForwardTrace trace = forward_trace(base, AdapterStack{}, x, t);
    const Tensor gx = backward(base, AdapterStack{}, trace, g_out, {{}, false, true}).input;
    const auto fx = [&](const Tensor& xx) { return dot(predict_noise(base, AdapterStack{}, xx, t), g_out); };
    EXPECT_LT(relative_error(gx, finite_diff_grad(fx, x, 1e-6)), 1e-7);
}

TEST_F(NetFixture, ExcludedAdaptersGetNoGradientAndEmptySetThrows) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    const LoraAdapter b = random_adapter(rng, base, 2);
    const Tensor x = gauss(rng, {1, 3});
    const std::vector<double> t{0.5};
    const std::size_t none[] = {0};
    EXPECT_THROW(backprop_adapters(base, AdapterStack{&a, &b}, x, t, x, std::span<const std::size_t>(none, 0)),
                 std::invalid_argument);
    const std::size_t only_b[] = {1};
    EXPECT_EQ(backprop_adapters(base, AdapterStack{&a, &b}, x, t, x, only_b).size(), 1u);
}
