#include <gtest/gtest.h>

#include "sahm/encoder.hpp"
#include "test_util.hpp"

using namespace sahm;
using namespace sahm::encoder;
using sahm::testkit::gradient_error;
using sahm::testkit::random_tensor;

TEST(Encoder, DeskPyramidShapes)
{
    ParamSet ps;
    Rng rng(1);
    Encoder enc(ps, "enc", EncoderConfig{}, rng);
    Graph g;
    Rng data(2);
    const auto p = enc.encode_image(g, g.constant(random_tensor({3, 64, 64}, data, 0, 1)));
    const Shape expected[] = {{16, 16, 16}, {32, 8, 8}, {64, 4, 4}, {128, 2, 2}};
    for (int i = 0; i < kStages; ++i) EXPECT_EQ(p.v[static_cast<std::size_t>(i)].shape(), expected[i]);
}

TEST(Encoder, ShapeInvariantsAcrossConfigs)
{
    for (int side : {16, 32, 64})
        for (int patch : {1, 2})
            for (int base : {2, 4}) {
                EncoderConfig c{side, patch, base, 1, 4};
                if (side % (patch * 8) != 0) continue;
                ParamSet ps;
                Rng rng(3);
                Encoder enc(ps, "enc", c, rng);
                Graph g;
                const auto p = enc.encode_image(g, g.constant(Tensor({3, side, side}, 0.5)));
                for (int i = 0; i < kStages; ++i) {
                    const Shape& s = p.v[static_cast<std::size_t>(i)].shape();
                    EXPECT_EQ(s, (Shape{base << i, side / patch >> i, side / patch >> i}));
                }
            }
}

TEST(Encoder, ZeroParametersGiveZeroPyramid)
{
    ParamSet ps;
    Rng rng(1);
    Encoder enc(ps, "enc", EncoderConfig{32, 2, 4, 1, 4}, rng);
    for (auto& [_, p] : ps) p.value.fill(0.0);
    Graph g;
    const auto p = enc.encode_image(g, g.constant(Tensor({3, 32, 32})));
    for (const auto& v : p.v)
        for (double x : v.value().values()) EXPECT_EQ(x, 0.0);
}

TEST(Encoder, RejectsWrongImageShape)
{
    ParamSet ps;
    Rng rng(1);
    Encoder enc(ps, "enc", EncoderConfig{}, rng);
    Graph g;
    try {
        enc.encode_image(g, g.constant(Tensor({3, 48, 64})));
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(3,64,64)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(3,48,64)"), std::string::npos) << msg;
    }
}

TEST(EncoderConfig, RejectsIndivisibleSide)
{
    EXPECT_THROW((EncoderConfig{60, 4, 16, 2, 4}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((EncoderConfig{64, 4, 16, 2, 4}.validate()));
}

TEST(Encoder, ParameterCountMatchesHandTally)
{
    // Layer-by-layer tally for patch 4, C_1 = 16, two blocks per stage.
    // Merge convs: 3*16*16+16, 16*32*4+32, 32*64*4+64, 64*128*4+128
    //   = 784 + 2080 + 8256 + 32896 = 44016.
    // One block at width C: q, k, v, out 4(C^2 + C); fc1 2C^2 + 2C;
    // fc2 2C^2 + C; two norms 4C. Two blocks per stage:
    //   C=16: 4448, C=32: 17088, C=64: 66944, C=128: 264960 = 353440.
    const std::size_t tally = 397456;
    ParamSet ps;
    Rng rng(1);
    Encoder enc(ps, "enc", EncoderConfig{}, rng);
    EXPECT_EQ(enc.param_count(), tally);
    EXPECT_EQ(ps.count(), tally);
    EXPECT_EQ(encoder_param_count(EncoderConfig{}), tally);
}

TEST(Encoder, InputGradientMatchesFiniteDifferences)
{
    ParamSet ps;
    Rng rng(4);
    Encoder enc(ps, "enc", EncoderConfig{8, 1, 2, 1, 2}, rng);
    Rng data(5);
    EXPECT_LT(gradient_error([&](Graph& g, const std::vector<Var>& v) { return testkit::probe(enc.encode_image(g, v[0]).v[3]); },
                             {random_tensor({3, 8, 8}, data, 0, 1)}),
              1e-3);
}
