// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "helpers.hpp"
#include "pairedit/evaluation.hpp"

using namespace pairedit;
using pairedit::testing::random_adapter;
using pairedit::testing::scratch_dir;
using pairedit::testing::tiny_shape;

TEST(Metrics, HandExamples) {
    const Tensor orig = Tensor::vector({3.0, 4.0});
    const Tensor g = Tensor::vector({1.0, 0.0});
    // d = (2, 1): along-g part 2, orthogonal part 1, |orig| = 5.
    const Tensor edited = Tensor::vector({5.0, 5.0});
    EXPECT_NEAR(identity_drift(orig, edited, g), 0.2, 1e-15);
    EXPECT_NEAR(alignment(orig, edited, g).cosine, 2.0 / std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(projection(orig, edited, g), 2.0, 1e-15);

    const Alignment z = alignment(orig, orig, g);
    EXPECT_TRUE(z.zero_delta);
    EXPECT_EQ(z.cosine, 0.0);
    EXPECT_EQ(identity_drift(orig, orig, g), 0.0);
    EXPECT_THROW(identity_drift(Tensor({2}), edited, g), std::invalid_argument);
    EXPECT_THROW(alignment(orig, edited, Tensor({2})), std::invalid_argument);
}

TEST(Metrics, RotationInvariant) {
    RngState rng(6);
    const Tensor orig = gauss(rng, {2});
    const Tensor edited = gauss(rng, {2});
    Tensor g = gauss(rng, {2});
    g = scale(g, 1.0 / norm(g));
    const double c = std::cos(0.7), s = std::sin(0.7);
    const Tensor R = Tensor::matrix(2, 2, {c, -s, s, c});
    auto rot = [&](const Tensor& v) { return matmul(R, v.reshaped({2, 1})).reshaped({2}); };
    EXPECT_NEAR(identity_drift(rot(orig), rot(edited), rot(g)), identity_drift(orig, edited, g), 1e-10);
    EXPECT_NEAR(alignment(rot(orig), rot(edited), rot(g)).cosine, alignment(orig, edited, g).cosine, 1e-10);
}

TEST(Report, CsvRoundTripIsByteExact) {
    EditReport r;
    r.rows.push_back({"V1", "full", 0.1, 1000, 1.0 / 3.0, -0.5, 1e-300});
    r.rows.push_back({"I1", "B", 1.5, 18446744073709551615ull, 0.0, 0.9999999999999999, 2.0});
    const std::string csv = r.to_csv();
    const EditReport back = EditReport::parse_csv(csv);
    EXPECT_EQ(back.rows, r.rows);
    EXPECT_EQ(back.to_csv(), csv);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "semantic,method,scale,seed,identity_drift,alignment,projection");
    EXPECT_THROW(EditReport::parse_csv("a,b\n"), std::runtime_error);
    EXPECT_THROW(EditReport::parse_csv(csv + "x,y,1\n"), std::runtime_error);

    const auto dir = scratch_dir("report");
    r.save(dir / "r.csv");
    std::ifstream is(dir / "r.csv", std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(is), {}), csv);
}

TEST(Report, SummaryAndMonotone) {
    EditReport r;
    const double scales[] = {0.0, 1.0};
    r.rows = {{"V1", "full", 0.0, 1, 0.0, 0.0, 0.0},
              {"V1", "full", 1.0, 1, 0.2, 0.8, 1.0},
              {"V1", "full", 0.0, 2, 0.0, 0.0, 0.0},
              {"V1", "full", 1.0, 2, 0.4, 0.6, -1.0},
              {"V1", "B", 1.0, 1, 9.0, 9.0, 9.0}};
    const ReportSummary s = summarize(r, "full", 1.0);
    EXPECT_EQ(s.count, 2u);
    EXPECT_NEAR(s.identity_drift, 0.3, 1e-15);
    EXPECT_NEAR(s.alignment, 0.7, 1e-15);
    EXPECT_EQ(summarize(r, "full").count, 4u);
    EXPECT_EQ(monotone_fraction(r, "full", scales), 0.5);
    EXPECT_THROW(monotone_fraction(r, "A", scales), std::invalid_argument);
}

TEST(Directions, FixedAndSemantic) {
    const DirectionFn f = fixed_direction(Tensor::vector({0.0, 2.0}));
    EXPECT_EQ(f(Tensor({2})), Tensor::vector({0.0, 1.0}));
    EXPECT_THROW(fixed_direction(Tensor({2})), std::invalid_argument);

    PairSpec spec = benchmark_spec("V2");
    spec.dim = 3;
    const DirectionFn s = semantic_direction(Semantic(spec), Tensor::vector({1.0, 0.0, 0.0}));
    EXPECT_EQ(s(Tensor({3})), Tensor::vector({1.0, 0.0, 0.0}));
    const Tensor x = Tensor::vector({1.0, 2.0, 3.0});
    const Tensor d = Semantic(spec).delta(x);
    EXPECT_LT(max_abs_diff(s(x), scale(d, 1.0 / norm(d))), 1e-15);
    EXPECT_EQ(eval_seeds(3, 7), (std::vector<std::uint64_t>{7, 8, 9}));
}

namespace {

struct EvalFixture : ::testing::Test {
    RngState rng{21};
    DenoiserParams base = DenoiserParams::initialize(rng, tiny_shape(4, 16, 2, 2));
    LoraAdapter sem = random_adapter(rng, base, 2);
    LoraAdapter content = random_adapter(rng, base, 2, 0.1);
    DirectionFn dir = fixed_direction(Tensor::vector({1.0, 1.0, 0.0, 0.0}));
    SampleConfig cfg = [] {
        SampleConfig c;
        c.num_steps = 8;
        c.off_steps = 4;
        return c;
    }();
};

}  // namespace

TEST_F(EvalFixture, SweepRowsRecomputeFromSamples) {
    const double scales[] = {0.0, 0.5, 1.0};
    const auto seeds = eval_seeds(4);
    const EditReport r = scale_sweep(base, {&content, &sem}, scales, seeds, cfg, dir, "toy", "full");
    ASSERT_EQ(r.rows.size(), 12u);
    AdapterStack plain{&content};
    AdapterStack edit{&content};
    edit.push_delayed(sem);
    const Tensor g = Tensor::vector({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0, 0.0});
    for (const auto& row : r.rows) {
        SampleConfig c = cfg;
        c.seed = row.seed;
        c.scale = row.scale;
        const Tensor o = generate(base, plain, c);
        const Tensor e = generate(base, edit, c);
        if (row.scale == 0.0) EXPECT_EQ(row.projection, 0.0);
        const Tensor d = sub(e, o);
        const double along = dot(d, g);
        const double orth = std::sqrt(std::max(0.0, squared_norm(d) - along * along));
        EXPECT_NEAR(row.projection, along, 1e-12);
        EXPECT_NEAR(row.identity_drift, orth / norm(o), 1e-7);
        EXPECT_EQ(row.method, "full");
    }
    EXPECT_THROW(scale_sweep(base, {&content, nullptr}, scales, seeds, cfg, dir, "toy", "full"), std::invalid_argument);
}

TEST_F(EvalFixture, FusionCompareZeroWeightIsNoEdit) {
    std::vector<RealInput> inputs;
    inputs.push_back({Tensor({4}), random_adapter(rng, base, 2), 5});
    const double gammas[] = {0.0, 0.75};
    const EditReport r = fusion_compare(base, inputs, sem, gammas, cfg, dir, "toy");
    ASSERT_EQ(r.rows.size(), 4u);
    EXPECT_EQ(r.rows[0].method, "fused");
    EXPECT_EQ(r.rows[1].method, "linear");
    EXPECT_EQ(r.rows[0].projection, 0.0);
    EXPECT_EQ(r.rows[1].projection, 0.0);
    EXPECT_EQ(r.rows[0].identity_drift, 0.0);
    EXPECT_NE(r.rows[2].projection, 0.0);
}

TEST_F(EvalFixture, AblationHasOneRowPerMethod) {
    PairSpec spec = benchmark_spec("V1");
    spec.dim = 4;
    const PairSet pairs = make_pairs(spec);
    TrainConfig tc;
    tc.steps = 10;
    tc.batch_size = 4;
    AblationOptions opt;
    const auto seeds = eval_seeds(3);
    opt.seeds = seeds;
    opt.sample = cfg;
    const AblationResult res = ablation_table(base, pairs, tc, opt, fixed_direction(pairs.g));
    ASSERT_EQ(res.report.rows.size(), 4u);
    EXPECT_EQ(res.report.rows[0].method, "full");
    EXPECT_EQ(res.report.rows[0].scale, 1.0);
    ASSERT_EQ(res.entries.size(), 4u);
    EXPECT_EQ(res.entries[3].method, Method::VariantC);
    for (const auto& e : res.entries) EXPECT_EQ(e.summary.count, 3u);
}
