#include <gtest/gtest.h>

#include "fill_oracle.hpp"
#include "sahm/decoder_inp.hpp"
#include "test_util.hpp"

using namespace sahm;
using namespace sahm::decoder_inp;
using sahm::testkit::gradient_error;
using sahm::testkit::masked_copy;
using sahm::testkit::random_tensor;

namespace {

struct Fixture {
    encoder::EncoderConfig enc{32, 2, 4, 1, 4}; // scale sides 16, 8, 4, 2
    ParamSet ps;
    Rng rng{21};
    decoder_seg::SegDecoder seg{ps, "seg", enc, rng};
    InpDecoder inp{ps, "inp", enc, seg, rng};
};

Tensor checker_mask(int side, int period)
{
    Tensor m({1, side, side});
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) m(0, y, x) = ((y / period + x / period) % 2) ? 1.0 : 0.0;
    return m;
}

} // namespace

TEST(ResidualInit, ShapeAndIdentityWithZeroBranches)
{
    ParamSet ps;
    Rng rng(1);
    std::vector<nn::ResidualBlock> blocks;
    for (int b = 0; b < 4; ++b) blocks.push_back(nn::make_residual_block(ps, "r" + std::to_string(b), 4, rng));
    Rng data(2);
    const Tensor x = random_tensor({4, 2, 2}, data);
    Graph g;
    EXPECT_EQ(init_residual(g, g.constant(x), blocks).shape(), x.shape());
    for (auto& b : blocks) {
        b.b.weight->value.fill(0.0);
        b.b.bias->value.fill(0.0);
    }
    Graph fresh;
    EXPECT_EQ(init_residual(fresh, fresh.constant(x), blocks).value(), x);
}

TEST(ResidualInit, GradientMatchesFiniteDifferences)
{
    ParamSet ps;
    Rng rng(3);
    std::vector<nn::ResidualBlock> blocks{nn::make_residual_block(ps, "r0", 2, rng), nn::make_residual_block(ps, "r1", 2, rng)};
    Rng data(4);
    EXPECT_LT(gradient_error([&](Graph& g, const std::vector<Var>& v) { return testkit::probe(init_residual(g, v[0], blocks)); },
                             {random_tensor({2, 3, 3}, data)}),
              1e-3);
}

TEST(BinarizeMask, StrictThreshold)
{
    const Tensor m = binarize_mask(Tensor({1, 1, 4}, {0.0, 30.0, -0.1, 0.1}), 0.5);
    EXPECT_EQ(m, Tensor({1, 1, 4}, {0, 1, 0, 1}));
    Rng rng(5);
    const Tensor l = random_tensor({1, 5, 5}, rng, -3, 3);
    const Tensor b = binarize_mask(l, 0.7);
    for (std::size_t i = 0; i < l.size(); ++i) EXPECT_EQ(b[i], 1.0 / (1.0 + std::exp(-l[i])) > 0.7 ? 1.0 : 0.0);
    EXPECT_THROW(binarize_mask(l, 1.0), std::invalid_argument);
}

TEST(HoleOut, EmptyFullAndOracle)
{
    Rng rng(6);
    const Tensor f = random_tensor({2, 3, 3}, rng);
    Graph g;
    EXPECT_EQ(hole_out(g.constant(f), Tensor({1, 3, 3})).value(), f);
    for (double v : hole_out(g.constant(f), Tensor({1, 3, 3}, 1.0)).value().values()) EXPECT_EQ(v, 0.0);
    const Tensor m = checker_mask(3, 1);
    const Tensor h = hole_out(g.constant(f), m).value();
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) EXPECT_EQ(h(c, y, x), m(0, y, x) ? 0.0 : f(c, y, x));
}

TEST(PatchGrid, AnyMaskedPixelMakesInterior)
{
    Tensor m({1, 4, 4});
    m(0, 1, 3) = 1.0;
    const auto g = PatchGrid::from_mask(m, 2);
    EXPECT_EQ(g.interior, std::vector<int>{1});
    EXPECT_EQ(g.exterior, (std::vector<int>{0, 2, 3}));
    EXPECT_EQ(g.total(), 4);
}

TEST(PatchSimilarity, SelfOrthogonalAndHandCase)
{
    // 1 x 2 grid of 1-pixel patches: interior patch 0, exterior patch 1.
    Tensor m({1, 1, 2}, {1, 0});
    const auto grid = PatchGrid::from_mask(m, 1);
    Graph g;
    auto sim = [&](std::vector<double> a, std::vector<double> b) {
        Tensor f({2, 1, 2}, {a[0], b[0], a[1], b[1]});
        return patch_similarity(g.constant(f), grid, 1)->value()(0, 0);
    };
    EXPECT_NEAR(sim({0.3, -2}, {0.3, -2}), 1.0, 1e-7);
    EXPECT_NEAR(sim({1, 0}, {0, 4}), 0.0, 1e-12);
    EXPECT_NEAR(sim({1, 2}, {3, 1}), 5.0 / (std::sqrt(5.0) * std::sqrt(10.0)), 1e-7);
}

TEST(PatchSimilarity, NoExteriorSignalsFallback)
{
    const auto grid = PatchGrid::from_mask(Tensor({1, 2, 2}, 1.0), 1);
    Graph g;
    EXPECT_FALSE(patch_similarity(g.constant(Tensor({1, 2, 2}, 1.0)), grid, 1).has_value());
}

TEST(AttentionScores, SingleEqualAndHandCases)
{
    Graph g;
    EXPECT_EQ(attention_scores(g.constant(Tensor({2, 1}, {0.3, -0.7}))).value(), Tensor({2, 1}, {1, 1}));
    for (double v : attention_scores(g.constant(Tensor({1, 4}, 0.2))).value().values()) EXPECT_NEAR(v, 0.25, 1e-12);
    const Tensor a = attention_scores(g.constant(Tensor({1, 2}, {0.5, -0.5}))).value();
    EXPECT_NEAR(a[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(a[1], 1.0 / (1.0 + std::exp(1.0)), 1e-12);
}

TEST(Fill, LoneExteriorPatchIsCopied)
{
    Rng rng(7);
    const Tensor src = random_tensor({2, 4, 4}, rng);
    Tensor m({1, 4, 4}, 1.0);
    m(0, 2, 3) = m(0, 2, 2) = m(0, 3, 2) = m(0, 3, 3) = 0.0; // patch 3 is the only exterior patch
    const auto grid = PatchGrid::from_mask(m, 2);
    Graph g;
    const Tensor out = fill(g.constant(Tensor({3, 1}, 1.0)), g.constant(src), grid).value();
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) EXPECT_NEAR(out(c, y, x), src(c, 2 + y % 2, 2 + x % 2), 1e-12);
}

TEST(Fill, IdenticalExteriorPatchesIgnoreScores)
{
    Tensor src({1, 4, 4});
    const double patch[4] = {0.1, 0.2, 0.3, 0.4};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) src(0, y, x) = patch[(y % 2) * 2 + x % 2];
    Tensor m({1, 4, 4});
    m(0, 0, 0) = 1.0;
    const auto grid = PatchGrid::from_mask(m, 2);
    Graph g;
    const Tensor out = fill(g.constant(Tensor({1, 3}, {0.6, 0.3, 0.1})), g.constant(src), grid).value();
    EXPECT_LT(max_abs_diff(out, src), 1e-12);
}

TEST(FillScale, MatchesOracleOnEightByEight)
{
    Fixture f;
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        const std::uint64_t bits = rng() & 0xFFFFu;
        const Tensor mask = testkit::mask_from_bits(bits, 8, rng);
        const Tensor coarse = random_tensor({3, 4, 4}, rng), src = random_tensor({2, 8, 8}, rng);
        const Tensor expect = testkit::fill_oracle(coarse, masked_copy(src, mask), mask);
        Graph g;
        bool fallback = false;
        const Tensor got = f.inp.fill_scale(g, 1, g.constant(coarse), g.constant(src), mask, &fallback).value();
        if (expect.empty()) {
            EXPECT_TRUE(fallback);
            continue;
        }
        EXPECT_FALSE(fallback);
        ASSERT_LT(max_abs_diff(got, expect), 1e-6) << "bits " << bits;
    }
}

TEST(FillScale, MatchesOracleOnSixteenBySixteen)
{
    Fixture f;
    Rng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        Tensor mask({1, 16, 16});
        const double density = std::uniform_real_distribution<double>(0.02, 0.25)(rng);
        for (double& v : mask.values()) v = std::uniform_real_distribution<double>(0, 1)(rng) < density ? 1.0 : 0.0;
        const Tensor coarse = random_tensor({5, 8, 8}, rng), src = random_tensor({2, 16, 16}, rng);
        const Tensor expect = testkit::fill_oracle(coarse, masked_copy(src, mask), mask);
        Graph g;
        bool fallback = true;
        const Tensor got = f.inp.fill_scale(g, 0, g.constant(coarse), g.constant(src), mask, &fallback).value();
        ASSERT_FALSE(expect.empty());
        EXPECT_FALSE(fallback);
        ASSERT_LT(max_abs_diff(got, expect), 1e-6);
    }
}

TEST(FillScale, EmptyMaskPassesThroughAndFullMaskFallsBack)
{
    Fixture f;
    Rng rng(10);
    const Tensor src = random_tensor({2, 8, 8}, rng), coarse = random_tensor({3, 4, 4}, rng);
    Graph g;
    bool fallback = true;
    EXPECT_EQ(f.inp.fill_scale(g, 1, g.constant(coarse), g.constant(src), Tensor({1, 8, 8}), &fallback).value(), src);
    EXPECT_FALSE(fallback);
    const Tensor out = f.inp.fill_scale(g, 1, g.constant(coarse), g.constant(src), Tensor({1, 8, 8}, 1.0), &fallback).value();
    EXPECT_TRUE(fallback);
    EXPECT_EQ(out.shape(), (Shape{f.seg.reduced_channels(1), 8, 8}));
    for (double v : out.values()) EXPECT_EQ(v, 0.0); // context starts at zero
}

TEST(FillScale, GradientThroughSimilarityAndSoftmax)
{
    Fixture f;
    Rng rng(11);
    const Tensor mask = checker_mask(8, 3);
    EXPECT_LT(gradient_error(
                  [&](Graph& g, const std::vector<Var>& v) {
                      return testkit::probe(f.inp.fill_scale(g, 1, v[0], v[1], mask, nullptr));
                  },
                  {random_tensor({3, 4, 4}, rng), random_tensor({2, 8, 8}, rng)}),
              1e-4);
}

TEST(Hdc, ReceptiveFieldAndIdentity)
{
    EXPECT_EQ(receptive_field(kHdcRates), 17);
    ParamSet ps;
    Rng rng(12);
    HdcParams p = make_hdc(ps, "hdc", 3, rng);
    const Tensor x = random_tensor({3, 9, 9}, rng);
    Graph g;
    EXPECT_EQ(hdc_refine(g, g.constant(x), p).shape(), x.shape());
    p.c.weight->value.fill(0.0);
    p.c.bias->value.fill(0.0);
    Graph fresh;
    EXPECT_EQ(hdc_refine(fresh, fresh.constant(x), p).value(), x);
}

TEST(Hdc, ConstantMapWithNormalizedKernels)
{
    // All-ones kernels scaled by 1/(9c) average their input, so a constant
    // map away from the border keeps its value through each branch layer.
    const int c = 2, side = 24;
    ParamSet ps;
    Rng rng(13);
    HdcParams p = make_hdc(ps, "hdc", c, rng);
    for (nn::Conv* conv : {&p.a, &p.b, &p.c}) {
        conv->weight->value.fill(1.0 / (9.0 * c));
        conv->bias->value.fill(0.0);
    }
    Graph g;
    const Tensor out = hdc_refine(g, g.constant(Tensor({c, side, side}, 0.5)), p).value();
    EXPECT_NEAR(out(0, 12, 12), 1.0, 1e-12);
    EXPECT_NEAR(out(1, 12, 11), 1.0, 1e-12);
    EXPECT_LT(out(0, 0, 0), 1.0); // zero padding shrinks the border
}

TEST(Hdc, GradientMatchesFiniteDifferences)
{
    ParamSet ps;
    Rng rng(14);
    HdcParams p = make_hdc(ps, "hdc", 2, rng);
    EXPECT_LT(gradient_error([&](Graph& g, const std::vector<Var>& v) { return testkit::probe(hdc_refine(g, v[0], p)); },
                             {random_tensor({2, 12, 12}, rng)}),
              1e-4);
}

TEST(RgbHead, ThreeChannelsAndOracle)
{
    ParamSet ps;
    Rng rng(15);
    const nn::Conv head = nn::make_pointwise(ps, "rgb", 4, 3, rng);
    const Tensor x = random_tensor({4, 3, 5}, rng);
    Graph g;
    const Tensor out = rgb_head(g, g.constant(x), head).value();
    ASSERT_EQ(out.shape(), (Shape{3, 3, 5}));
    for (int o = 0; o < 3; ++o)
        for (int y = 0; y < 3; ++y)
            for (int xx = 0; xx < 5; ++xx) {
                double acc = head.bias->value[o];
                for (int i = 0; i < 4; ++i) acc += head.weight->value[static_cast<std::size_t>(o * 4 + i)] * x(i, y, xx);
                EXPECT_NEAR(out(o, y, xx), acc, 1e-12);
            }
    head.weight->value.fill(0.0);
    head.bias->value.fill(0.0);
    Graph fresh;
    for (double v : rgb_head(fresh, fresh.constant(x), head).value().values()) EXPECT_EQ(v, 0.0);
}

TEST(InpDecoder, RejectsBadPatchAndProducesPyramid)
{
    Fixture f;
    Rng rng(16);
    EXPECT_THROW(InpDecoder(f.ps, "bad", f.enc, f.seg, rng, {4, 3, 0.5}), std::invalid_argument);
    Graph g;
    std::array<Var, encoder::kStages> fused;
    for (int i = 0; i < 4; ++i)
        fused[static_cast<std::size_t>(i)] = g.constant(random_tensor({f.enc.channels(i), f.enc.side(i), f.enc.side(i)}, rng));
    const auto seg = f.seg(g, fused);
    const auto inp = f.inp(g, fused[3], seg);
    for (int i = 0; i < 3; ++i) {
        const auto k = static_cast<std::size_t>(i);
        EXPECT_EQ(inp.rgb[k].shape(), (Shape{3, f.enc.side(i), f.enc.side(i)}));
        EXPECT_EQ(inp.masks[k].shape(), (Shape{1, f.enc.side(i), f.enc.side(i)}));
    }
}
