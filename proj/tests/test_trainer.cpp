// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "pairedit/datagen.hpp"
#include "pairedit/sampler.hpp"
#include "pairedit/trainer.hpp"

using namespace pairedit;
using pairedit::testing::tiny_shape;

namespace {

struct TrainerFixture : ::testing::Test {
    RngState rng{8};
    DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape(4, 16, 2, 2));
    Tensor x0a = gauss(rng, {3, 4});
    Tensor x0b = [this] {
        Tensor b = x0a;
        for (std::size_t i = 0; i < b.dim(0); ++i) b(i, 0) += 1.0;
        return b;
    }();
    TrainConfig cfg = [] {
        TrainConfig c;
        c.steps = 20;
        c.batch_size = 4;
        c.seed = 5;
        return c;
    }();
};

}  // namespace

TEST(SampleBatch, WithoutReplacementWhenEnoughRows) {
    RngState rng(1);
    Tensor a({20, 2});
    for (std::size_t i = 0; i < 20; ++i) a(i, 0) = static_cast<double>(i);
    const Tensor b = scale(a, 2.0);
    const PairedBatch batch = sample_batch(rng, a, b, 16, 0.05);
    std::set<double> seen;
    for (std::size_t i = 0; i < 16; ++i) {
        seen.insert(batch.x0a(i, 0));
        EXPECT_EQ(batch.x0b(i, 0), 2.0 * batch.x0a(i, 0));
        EXPECT_GE(batch.t[i], 0.05);
        EXPECT_LE(batch.t[i], 1.0);
    }
    EXPECT_EQ(seen.size(), 16u);
    EXPECT_EQ(batch.eps0.shape(), (Shape{16, 2}));
}

TEST(SampleBatch, WithReplacementWhenFewRows) {
    RngState rng(2);
    const Tensor a = Tensor::matrix(2, 1, {1.0, 2.0});
    const PairedBatch batch = sample_batch(rng, a, a, 8, 0.5);
    EXPECT_EQ(batch.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_TRUE(batch.x0a(i, 0) == 1.0 || batch.x0a(i, 0) == 2.0);
        EXPECT_GE(batch.t[i], 0.5);
    }
}

TEST_F(TrainerFixture, Deterministic) {
    const auto r1 = train_pairedit(base, x0a, x0b, cfg);
    const auto r2 = train_pairedit(base, x0a, x0b, cfg);
    EXPECT_EQ(flatten(r1.semantic), flatten(r2.semantic));
    EXPECT_EQ(flatten(*r1.content), flatten(*r2.content));
    EXPECT_EQ(loss_log_csv(r1.log), loss_log_csv(r2.log));
    EXPECT_EQ(r1.log.size(), cfg.steps);
}

TEST_F(TrainerFixture, LambdaZeroFreezesSemantic) {
    cfg.loss.lambda_sem = 0.0;
    const auto r = train_pairedit(base, x0a, x0b, cfg);
    RngState init(derive_seed(cfg.seed, 4));
    const LoraAdapter fresh = init_adapter(init, base, cfg.rank, cfg.init_scale);
    EXPECT_EQ(flatten(r.semantic), flatten(fresh));
    for (const auto& e : r.log) EXPECT_EQ(e.total, e.content);
}

TEST_F(TrainerFixture, VariantsShapeResult) {
    for (Method m : {Method::VariantA, Method::VariantB}) {
        cfg.method = m;
        const auto r = train_pairedit(base, x0a, x0b, cfg);
        EXPECT_FALSE(r.content.has_value());
        for (const auto& e : r.log) EXPECT_EQ(e.content, 0.0);
    }
    cfg.method = Method::VariantC;
    EXPECT_TRUE(train_pairedit(base, x0a, x0b, cfg).content.has_value());
}

TEST_F(TrainerFixture, TotalIsContentPlusWeightedSemantic) {
    cfg.loss.lambda_sem = 0.5;
    const auto r = train_pairedit(base, x0a, x0b, cfg);
    for (const auto& e : r.log) EXPECT_DOUBLE_EQ(e.total, e.content + 0.5 * e.semantic);
}

TEST_F(TrainerFixture, RejectsMismatchedPairs) {
    EXPECT_THROW(train_pairedit(base, x0a, Tensor({2, 4}), cfg), std::invalid_argument);
    EXPECT_THROW(train_pairedit(base, Tensor({3, 5}), Tensor({3, 5}), cfg), std::invalid_argument);
    cfg.t_min = 1.5;
    EXPECT_THROW(train_pairedit(base, x0a, x0b, cfg), std::invalid_argument);
}

TEST(LossLog, CsvFormat) {
    const std::vector<StepLog> log{{0, 1.5, 2.0, 3.5}, {1, 0.25, 0.125, 0.375}};
    const std::string csv = loss_log_csv(log);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "step,L_content,L_semantic,L_total");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 2), "0,");
    std::size_t rows = 1;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 2u);
}

TEST(MethodNames, RoundTrip) {
    for (Method m : {Method::Full, Method::VariantA, Method::VariantB, Method::VariantC})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("D"), std::invalid_argument);
}

TEST_F(TrainerFixture, ReconstructionReducesError) {
    const Tensor target = Tensor::vector({0.5, -0.5, 1.0, 0.0});
    ReconConfig rc;
    rc.steps = 60;
    rc.num_steps = 6;
    rc.seed = 3;
    std::vector<double> losses;
    const LoraAdapter rec = fit_reconstruction_lora(base, target, rc, &losses);
    ASSERT_EQ(losses.size(), rc.steps);
    SampleConfig sc;
    sc.num_steps = rc.num_steps;
    sc.off_steps = 0;
    sc.seed = rc.seed;
    const double before = squared_norm(sub(generate(base, AdapterStack{}, sc), target));
    const double after = squared_norm(sub(generate(base, AdapterStack{&rec}, sc), target));
    EXPECT_LT(after, 0.25 * before);

    rc.steps = 0;
    RngState init(derive_seed(rc.seed, 5));
    EXPECT_EQ(flatten(fit_reconstruction_lora(base, target, rc)), flatten(init_adapter(init, base, rc.rank, rc.init_scale)));
}

TEST(Pretrain, DeterministicAndLearns) {
    RngState rng(3);
    const Tensor data = add(gauss(rng, {64, 2}), Tensor::full({64, 2}, 2.0));
    PretrainConfig pc;
    pc.steps = 150;
    pc.batch_size = 32;
    pc.hidden_width = 16;
    const auto r1 = pretrain_base(data, pc);
    const auto r2 = pretrain_base(data, pc);
    EXPECT_EQ(r1.losses, r2.losses);
    EXPECT_EQ(r1.base.layers()[0].weight, r2.base.layers()[0].weight);
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        head += r1.losses[i];
        tail += r1.losses[pc.steps - 1 - i];
    }
    EXPECT_LT(tail, head);
}
