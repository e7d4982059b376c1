#include <gtest/gtest.h>

#include "sahm/ops.hpp"
#include "test_util.hpp"

using namespace sahm;
using sahm::testkit::gradient_error;
using sahm::testkit::probe;
using sahm::testkit::random_tensor;

namespace {

constexpr double kGradTol = 1e-3;

} // namespace

TEST(Tensor, ShapeMismatchNamesBothShapes)
{
    try {
        require_same_shape(Tensor({2, 3}), Tensor({3, 2}), "probe");
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("(2,3)"), std::string::npos) << e.what();
    }
}

TEST(Ops, MatmulMatchesHandProduct)
{
    Graph g;
    Var a = g.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Var b = g.constant(Tensor({3, 2}, {7, 8, 9, 10, 11, 12}));
    const Tensor c = ops::matmul(a, b).value();
    EXPECT_EQ(c, Tensor({2, 2}, {58, 64, 139, 154}));
}

TEST(Ops, SoftmaxRowsSumToOne)
{
    Rng rng(3);
    Graph g;
    const Tensor s = ops::softmax_rows(g.constant(random_tensor({5, 7}, rng, -30, 30))).value();
    for (int r = 0; r < 5; ++r) {
        double sum = 0.0;
        for (int c = 0; c < 7; ++c) {
            EXPECT_GE(s(r, c), 0.0);
            sum += s(r, c);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Ops, ConvMatchesDirectLoop)
{
    Rng rng(5);
    const Tensor x = random_tensor({2, 5, 6}, rng), w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    Graph g;
    const ops::ConvSpec spec{1, 1, 1, 2};
    const Tensor y = ops::conv2d(g.constant(x), g.constant(w), g.constant(b), spec).value();
    ASSERT_EQ(y.shape(), (Shape{3, 3, 4}));
    for (int o = 0; o < 3; ++o)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) {
                double acc = b[static_cast<std::size_t>(o)];
                for (int c = 0; c < 2; ++c)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int yy = i - 1 + 2 * ky, xx = j - 1 + 2 * kx;
                            if (yy < 0 || xx < 0 || yy >= 5 || xx >= 6) continue;
                            acc += w[((static_cast<std::size_t>(o) * 2 + c) * 3 + ky) * 3 + kx] * x(c, yy, xx);
                        }
                EXPECT_NEAR(y(o, i, j), acc, 1e-12);
            }
}

TEST(Ops, PointwiseConvFlopsAreTwiceTheMacs)
{
    Rng rng(1);
    Graph g;
    ops::FlopScope scope;
    ops::conv2d(g.constant(random_tensor({4, 5, 6}, rng)), g.constant(random_tensor({7, 4, 1, 1}, rng)), Var(), {});
    EXPECT_EQ(scope.flops(), 2u * 4 * 7 * 5 * 6);
}

TEST(Ops, PatchColumnsRoundTrip)
{
    Rng rng(2);
    const Tensor x = random_tensor({3, 4, 6}, rng);
    Graph g;
    Var cols = ops::patches_to_columns(g.constant(x), 2);
    ASSERT_EQ(cols.shape(), (Shape{12, 6}));
    // column 4 is the patch at grid row 1, col 1; row (c=2, dy=1, dx=0)
    EXPECT_EQ(cols.value()(2 * 4 + 1 * 2 + 0, 4), x(2, 3, 2));
    EXPECT_EQ(ops::columns_to_patches(cols, 3, 4, 6, 2).value(), x);
}

TEST(Ops, BilinearUpsampleOfRamp)
{
    Graph g;
    const Tensor up = ops::resize_bilinear(g.constant(Tensor({1, 2, 2}, {0, 1, 2, 3})), 4, 4).value();
    // half-pixel centres: output x maps to (x + 0.5) / 2 - 0.5, clamped
    const double row0[] = {0, 0.25, 0.75, 1};
    for (int x = 0; x < 4; ++x) EXPECT_NEAR(up(0, 0, x), row0[x], 1e-12);
    const double col0[] = {0, 0.5, 1.5, 2};
    for (int y = 0; y < 4; ++y) EXPECT_NEAR(up(0, y, 0), col0[y], 1e-12);
}

TEST(Ops, BilinearKeepsConstants)
{
    Graph g;
    const Tensor up = ops::resize_bilinear(g.constant(Tensor({2, 3, 3}, 0.7)), 6, 6).value();
    for (double v : up.values()) EXPECT_NEAR(v, 0.7, 1e-12);
}

struct GradCase {
    const char* name;
    sahm::testkit::ScalarFn fn;
    std::vector<Shape> shapes;
};

class OpGradient : public ::testing::TestWithParam<int> {};

std::vector<GradCase> grad_cases()
{
    using V = std::vector<Var>;
    return {
        {"add_mul", [](Graph&, const V& v) { return probe(ops::mul(ops::add(v[0], v[1]), v[1])); }, {{2, 3}, {2, 3}}},
        {"sigmoid_tanh", [](Graph&, const V& v) { return probe(ops::tanh(ops::sigmoid(v[0]))); }, {{3, 4}}},
        {"log_reciprocal", [](Graph&, const V& v) { return probe(ops::log(ops::reciprocal(ops::add_scalar(ops::sigmoid(v[0]), 1.0)), 1e-8)); }, {{5}}},
        {"matmul_transpose", [](Graph&, const V& v) { return probe(ops::matmul(ops::transpose(v[0]), v[1])); }, {{3, 2}, {3, 4}}},
        {"softmax", [](Graph&, const V& v) { return probe(ops::softmax_rows(v[0])); }, {{3, 5}}},
        {"normalize_rows", [](Graph&, const V& v) { return probe(ops::normalize_rows(v[0], 1e-8)); }, {{3, 4}}},
        {"scale_by", [](Graph&, const V& v) { return probe(ops::scale_by(v[0], v[1])); }, {{2, 2}, {1}}},
        {"conv_dilated", [](Graph&, const V& v) { return probe(ops::conv2d(v[0], v[1], v[2], ops::ConvSpec::same(3, 2))); },
         {{2, 5, 5}, {2, 2, 3, 3}, {2}}},
        {"conv_strided", [](Graph&, const V& v) { return probe(ops::conv2d(v[0], v[1], v[2], {2, 1, 1, 1})); },
         {{2, 6, 6}, {3, 2, 3, 3}, {3}}},
        {"resize", [](Graph&, const V& v) { return probe(ops::resize_bilinear(v[0], 6, 4)); }, {{2, 3, 2}}},
        {"avg_pool", [](Graph&, const V& v) { return probe(ops::avg_pool(v[0], 2)); }, {{2, 4, 4}}},
        {"layer_norm", [](Graph&, const V& v) { return probe(ops::layer_norm_channels(v[0], v[1], v[2])); }, {{3, 2, 2}, {3}, {3}}},
        {"local_attention", [](Graph&, const V& v) { return probe(ops::local_attention(v[0], v[1], v[2], 2)); },
         {{2, 4, 4}, {2, 4, 4}, {2, 4, 4}}},
        {"patch_columns", [](Graph&, const V& v) { return probe(ops::columns_to_patches(ops::patches_to_columns(v[0], 2), 2, 4, 4, 2)); },
         {{2, 4, 4}}},
        {"gather_scatter", [](Graph&, const V& v) { return probe(ops::scatter_columns(ops::gather_columns(v[0], {2, 0}), {1, 3}, 4)); },
         {{2, 3}}},
        {"concat_slice", [](Graph&, const V& v) { return probe(ops::slice_rows(ops::concat({v[0], v[1]}), 1, 4)); }, {{2, 3}, {3, 3}}},
        {"broadcast_bias", [](Graph&, const V& v) { return probe(ops::add_channel_bias(ops::broadcast_spatial(v[0], 2, 3), v[1])); },
         {{2}, {2}}},
        {"leaky_relu", [](Graph&, const V& v) { return probe(ops::leaky_relu(v[0], 0.2)); }, {{4, 3}}},
    };
}

TEST_P(OpGradient, MatchesCentralDifferences)
{
    const auto c = grad_cases().at(static_cast<std::size_t>(GetParam()));
    Rng rng(17 + GetParam());
    std::vector<Tensor> inputs;
    for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng));
    EXPECT_LT(gradient_error(c.fn, inputs), kGradTol) << c.name;
}

INSTANTIATE_TEST_SUITE_P(All, OpGradient, ::testing::Range(0, static_cast<int>(grad_cases().size())));

TEST(OpGradient, BceAndL1)
{
    Rng rng(4);
    Tensor target({1, 3, 3});
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = i % 2;
    Tensor other = random_tensor({1, 3, 3}, rng);
    EXPECT_LT(gradient_error([&](Graph&, const std::vector<Var>& v) { return ops::bce_with_logits_sum(v[0], target); },
                             {random_tensor({1, 3, 3}, rng, -3, 3)}),
              kGradTol);
    EXPECT_LT(gradient_error([&](Graph&, const std::vector<Var>& v) { return ops::l1_mean(v[0], other); },
                             {random_tensor({1, 3, 3}, rng)}),
              kGradTol);
}

TEST(Autograd, GradientsAccumulateIntoParameters)
{
    ParamSet ps;
    Parameter& p = ps.add("w", Tensor({2}, {1.0, 2.0}));
    for (int k = 0; k < 2; ++k) {
        Graph g;
        Var y = ops::sum(ops::mul(g.param(p), g.param(p)));
        g.backward(y);
        g.accumulate_parameter_grads();
    }
    EXPECT_EQ(p.grad, Tensor({2}, {4.0, 8.0}));
}
