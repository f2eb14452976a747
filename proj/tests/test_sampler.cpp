// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "helpers.hpp"
#include "pairedit/sampler.hpp"

using namespace pairedit;
using pairedit::testing::naive_matmul;
using pairedit::testing::random_adapter;
using pairedit::testing::tiny_shape;

namespace {

struct SamplerFixture : ::testing::Test {
    RngState rng{31};
    DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape(4, 16, 2, 2));
};

}  // namespace

TEST(Sampler, TimeGrid) {
    const auto g = time_grid(4);
    ASSERT_EQ(g.size(), 4u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_DOUBLE_EQ(g[1], 0.75);
    EXPECT_DOUBLE_EQ(g[3], 0.25);
}

TEST(Sampler, IntegrateConstantVelocity) {
    const Tensor x1 = Tensor::vector({1.0, 2.0});
    const Tensor v = Tensor::vector({0.5, -1.0});
    Trajectory log;
    const Tensor x0 = integrate(x1, 8, [&](const Tensor&, double, std::size_t) { return v; }, &log);
    EXPECT_LT(max_abs_diff(x0, sub(x1, v)), 1e-15);
    EXPECT_EQ(log.states.size(), 9u);
    EXPECT_EQ(log.predictions.size(), 8u);
}

TEST(Sampler, InitialNoiseIsSeedGauss) {
    RngState rng(77);
    EXPECT_EQ(initial_noise(77, 5), gauss(rng, {5}));
    const std::uint64_t seeds[] = {3, 9};
    const Tensor batch = initial_noise_batch(seeds, 5);
    EXPECT_EQ(batch.row_copy(1), initial_noise(9, 5));
}

TEST_F(SamplerFixture, BatchMatchesPerSeedBitwise) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    AdapterStack stack;
    stack.push_delayed(a);
    SampleConfig cfg;
    cfg.scale = 0.8;
    const std::uint64_t seeds[] = {1000, 1001, 1002};
    const Tensor batch = generate_batch(base, stack, cfg, seeds);
    for (std::size_t i = 0; i < 3; ++i) {
        cfg.seed = seeds[i];
        EXPECT_EQ(batch.row_copy(i), generate(base, stack, cfg));
    }
}

TEST_F(SamplerFixture, DelayedAdapterSilentBeforeOffSteps) {
    const LoraAdapter a = random_adapter(rng, base, 2);
    AdapterStack stack;
    stack.push_delayed(a);
    SampleConfig cfg;
    cfg.seed = 4;
    Trajectory with, without;
    generate(base, stack, cfg, &with);
    generate(base, AdapterStack{}, cfg, &without);
    for (std::size_t k = 0; k <= cfg.off_steps; ++k) EXPECT_EQ(with.states[k], without.states[k]);
    EXPECT_NE(with.states.back(), without.states.back());

    cfg.scale = 0.0;
    EXPECT_EQ(generate(base, stack, cfg), generate(base, AdapterStack{}, cfg));
    cfg.scale = 1.0;
    cfg.off_steps = cfg.num_steps;
    EXPECT_EQ(generate(base, stack, cfg), generate(base, AdapterStack{}, cfg));
}

TEST_F(SamplerFixture, StackAtStepScales) {
    LoraAdapter a = random_adapter(rng, base, 2);
    a.scale = 2.0;
    AdapterStack stack;
    stack.push(a);
    stack.push_delayed(a);
    SampleConfig cfg;
    cfg.scale = 0.5;
    EXPECT_EQ(stack_at_step(stack, cfg, 0)[1].effective_scale(), 0.0);
    EXPECT_EQ(stack_at_step(stack, cfg, 14)[1].effective_scale(), 1.0);
    EXPECT_EQ(stack_at_step(stack, cfg, 0)[0].effective_scale(), 2.0);
}

TEST_F(SamplerFixture, FusionEndpointsAndAffinity) {
    const LoraAdapter rec = random_adapter(rng, base, 2);
    const LoraAdapter sem = random_adapter(rng, base, 2);
    const Tensor x = gauss(rng, {4});
    const Tensor e_rec = predict_noise(base, AdapterStack{&rec}, x, 0.3);
    const Tensor e_both = predict_noise(base, AdapterStack{&rec, &sem}, x, 0.3);
    EXPECT_EQ(fused_noise(base, &rec, sem, x, 0.3, 0.0), e_rec);
    EXPECT_EQ(fused_noise(base, &rec, sem, x, 0.3, 1.0), e_both);
    for (double g : {-1.0, 0.2, 0.5, 0.75, 2.0}) {
        const Tensor want = add(scale(e_rec, 1.0 - g), scale(e_both, g));
        EXPECT_LT(max_abs_diff(fused_noise(base, &rec, sem, x, 0.3, g), want), 1e-14);
    }
    // No reconstruction adapter: the bare base plays its role.
    EXPECT_EQ(fused_noise(base, nullptr, sem, x, 0.3, 0.0), predict_noise(base, AdapterStack{}, x, 0.3));
}

TEST_F(SamplerFixture, ComposeGeneralizesFusion) {
    const LoraAdapter rec = random_adapter(rng, base, 2);
    const LoraAdapter s1 = random_adapter(rng, base, 2);
    const LoraAdapter s2 = random_adapter(rng, base, 2);
    const Tensor x = gauss(rng, {4});
    const LoraAdapter* one[] = {&s1};
    const double g1[] = {0.6};
    EXPECT_EQ(compose(base, &rec, one, g1, x, 0.4), fused_noise(base, &rec, s1, x, 0.4, 0.6));

    const LoraAdapter* two[] = {&s1, &s2};
    const double g2[] = {0.3, 0.5};
    const Tensor e0 = predict_noise(base, AdapterStack{&rec}, x, 0.4);
    const Tensor e1 = predict_noise(base, AdapterStack{&rec, &s1}, x, 0.4);
    const Tensor e2 = predict_noise(base, AdapterStack{&rec, &s2}, x, 0.4);
    const Tensor want = add(add(scale(e0, 0.2), scale(e1, 0.3)), scale(e2, 0.5));
    EXPECT_LT(max_abs_diff(compose(base, &rec, two, g2, x, 0.4), want), 1e-14);
    EXPECT_THROW(compose(base, &rec, two, g1, x, 0.4), std::invalid_argument);
}

TEST_F(SamplerFixture, LinearMergeEqualsDenseSum) {
    LoraAdapter rec = random_adapter(rng, base, 2);
    rec.scale = 0.7;
    LoraAdapter sem = random_adapter(rng, base, 3);
    sem.scale = 1.3;
    const double alpha = 0.4;
    const LoraAdapter merged = linear_merge(rec, sem, alpha);
    EXPECT_EQ(merged.rank(), 5u);
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
        const Tensor want = add(layer_delta(rec, l), scale(layer_delta(sem, l), alpha));
        EXPECT_LT(max_abs_diff(layer_delta(merged, l), want), 1e-14);
        EXPECT_LT(max_abs_diff(naive_matmul(merged.layers[l].up, merged.layers[l].down), want), 1e-14);
    }
}

TEST_F(SamplerFixture, EditsWithZeroWeightReproduceReconstruction) {
    const LoraAdapter rec = random_adapter(rng, base, 2);
    const LoraAdapter sem = random_adapter(rng, base, 2);
    SampleConfig cfg;
    cfg.seed = 12;
    const Tensor original = generate(base, AdapterStack{&rec}, cfg);
    cfg.gamma_real = 0.0;
    EXPECT_EQ(fused_edit(base, &rec, sem, cfg), original);
    EXPECT_EQ(linear_edit(base, &rec, sem, 0.0, cfg), original);
    cfg.gamma_real = 0.75;
    EXPECT_NE(fused_edit(base, &rec, sem, cfg), original);
}

TEST(Sampler, ConfigValidation) {
    SampleConfig cfg;
    cfg.num_steps = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.num_steps = 10;
    cfg.off_steps = 11;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
