#include <gtest/gtest.h>

#include "sahm/fusion.hpp"
#include "test_util.hpp"

using namespace sahm;
using namespace sahm::fusion;
using sahm::testkit::gradient_error;
using sahm::testkit::random_tensor;

namespace {

void set_identity(nn::Conv& c)
{
    Tensor& w = c.weight->value;
    w.fill(0.0);
    const int n = std::min(w.dim(0), w.dim(1));
    for (int i = 0; i < n; ++i) w[(static_cast<std::size_t>(i) * w.dim(1) + i)] = 1.0;
    if (c.bias) c.bias->value.fill(0.0);
}

double row_sum(const Tensor& m, int r)
{
    double s = 0.0;
    for (int c = 0; c < m.dim(1); ++c) s += m(r, c);
    return s;
}

} // namespace

TEST(Project, FlatteningIsRowMajor)
{
    ParamSet ps;
    Rng rng(1);
    HeadProjections h = make_head(ps, "h", 2, 2, rng);
    set_identity(h.query);
    Graph g;
    Tensor v({2, 2, 2}, {0, 1, 2, 3, 10, 11, 12, 13});
    const auto p = project(g, g.constant(Tensor({2, 1}, 1.0)), g.constant(v), h);
    EXPECT_EQ(p.queries.value(), Tensor({2, 4}, {0, 1, 2, 3, 10, 11, 12, 13}));
}

TEST(Project, ZeroQueryMapGivesZeroQueries)
{
    ParamSet ps;
    Rng rng(1);
    HeadProjections h = make_head(ps, "h", 3, 2, rng);
    h.query.weight->value.fill(0.0);
    h.query.bias->value.fill(0.0);
    Graph g;
    Rng data(2);
    const auto p = project(g, g.constant(random_tensor({3, 2}, data)), g.constant(random_tensor({2, 2, 2}, data)), h);
    for (double x : p.queries.value().values()) EXPECT_EQ(x, 0.0);
}

TEST(Project, MatchesExplicitMatrixProduct)
{
    ParamSet ps;
    Rng rng(3);
    HeadProjections h = make_head(ps, "h", 3, 3, rng);
    Rng data(4);
    const Tensor text = random_tensor({3, 2}, data), vis = random_tensor({3, 3, 3}, data);
    Graph g;
    const auto p = project(g, g.constant(text), g.constant(vis), h);
    for (int o = 0; o < 3; ++o) {
        for (int t = 0; t < 2; ++t) {
            double k = h.key.bias->value[static_cast<std::size_t>(o)], v = h.value.bias->value[static_cast<std::size_t>(o)];
            for (int c = 0; c < 3; ++c) {
                k += h.key.weight->value[static_cast<std::size_t>(o) * 3 + c] * text(c, t);
                v += h.value.weight->value[static_cast<std::size_t>(o) * 3 + c] * text(c, t);
            }
            EXPECT_NEAR(p.keys.value()(o, t), k, 1e-12);
            EXPECT_NEAR(p.values.value()(o, t), v, 1e-12);
        }
        for (int px = 0; px < 9; ++px) {
            double q = h.query.bias->value[static_cast<std::size_t>(o)];
            for (int c = 0; c < 3; ++c) q += h.query.weight->value[static_cast<std::size_t>(o) * 3 + c] * vis[static_cast<std::size_t>(c) * 9 + px];
            EXPECT_NEAR(p.queries.value()(o, px), q, 1e-12);
        }
    }
}

TEST(CosineAttention, OrthonormalKeys)
{
    Graph g;
    const Tensor s = cosine_attention(g.constant(Tensor({2, 1}, {1, 0})), g.constant(Tensor({2, 2}, {1, 0, 0, 1})),
                                      g.constant(Tensor({1}, 1.0)))
                         .value();
    EXPECT_NEAR(s(0, 0), 1.0, 1e-7);
    EXPECT_NEAR(s(0, 1), 0.0, 1e-12);
}

TEST(CosineAttention, ClosedFormWithGamma)
{
    Graph g;
    const Tensor s = cosine_attention(g.constant(Tensor({2, 1}, {1, 1})), g.constant(Tensor({2, 1}, {1, 0})),
                                      g.constant(Tensor({1}, 2.0)))
                         .value();
    EXPECT_NEAR(s(0, 0), 1.0 / (2.0 * std::sqrt(2.0)), 1e-7);
}

TEST(CosineAttention, InvariantToPositiveScaling)
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor q = random_tensor({4, 6}, rng), k = random_tensor({4, 3}, rng);
        Graph g;
        Var gamma = g.constant(Tensor({1}, 0.7));
        const Tensor base = cosine_attention(g.constant(q), g.constant(k), gamma).value();
        const double f = std::exp(std::uniform_real_distribution<double>(-3, 3)(rng));
        Tensor q2 = q, k2 = k;
        for (int c = 0; c < 4; ++c) {
            q2(c, trial % 6) *= f;
            k2(c, trial % 3) *= f;
        }
        const Tensor scaled = cosine_attention(g.constant(q2), g.constant(k2), gamma).value();
        EXPECT_LT(max_abs_diff(base, scaled), 1e-6);
    }
}

TEST(Attend, OrthonormalWeights)
{
    Graph g;
    Var scores = cosine_attention(g.constant(Tensor({2, 1}, {1, 0})), g.constant(Tensor({2, 2}, {1, 0, 0, 1})),
                                  g.constant(Tensor({1}, 1.0)));
    // values are the identity, so G reads back the softmax weights
    const Tensor out = attend(scores, g.constant(Tensor({2, 2}, {1, 0, 0, 1})), 1, 1).value();
    EXPECT_NEAR(out[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-7);
    EXPECT_NEAR(out[1], 1.0 / (std::exp(1.0) + 1.0), 1e-7);
}

TEST(Attend, SingleKeyBroadcastsItsValue)
{
    Rng rng(6);
    Graph g;
    const Tensor vals = random_tensor({3, 1}, rng);
    const Tensor out = attend(g.constant(random_tensor({4, 1}, rng)), g.constant(vals), 2, 2).value();
    for (int c = 0; c < 3; ++c)
        for (int p = 0; p < 4; ++p) EXPECT_NEAR(out[static_cast<std::size_t>(c) * 4 + p], vals[static_cast<std::size_t>(c)], 1e-12);
}

TEST(Attend, EqualScoresGiveUniformWeights)
{
    Graph g;
    const Tensor out = attend(g.constant(Tensor({1, 4}, 2.5)), g.constant(Tensor({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1})), 1, 1).value();
    for (double v : out.values()) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Hadamard, IdentityAbsorbingAndOracle)
{
    Rng rng(7);
    const Tensor v = random_tensor({2, 2, 2}, rng), w = random_tensor({2, 2, 2}, rng);
    Graph g;
    EXPECT_EQ(hadamard_fuse(g.constant(v), g.constant(Tensor({2, 2, 2}, 1.0))).value(), v);
    for (double x : hadamard_fuse(g.constant(Tensor({2, 2, 2})), g.constant(w)).value().values()) EXPECT_EQ(x, 0.0);
    const Tensor p = hadamard_fuse(g.constant(v), g.constant(w)).value();
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(p[i], v[i] * w[i]);
    EXPECT_THROW(hadamard_fuse(g.constant(v), g.constant(Tensor({2, 2, 1}))), std::invalid_argument);
}

TEST(AwHead, SingleWordMatchesCosinePath)
{
    ParamSet ps;
    Rng rng(8);
    HeadProjections h = make_head(ps, "h", 3, 2, rng);
    Rng data(9);
    const Tensor word = random_tensor({3, 1}, data), vis = random_tensor({2, 3, 3}, data);
    Graph g;
    const Tensor a = aw_head(g, g.constant(word), g.constant(vis), h).value();
    const Tensor b = sentence_head(g, g.constant(word), g.constant(vis), h, g.constant(Tensor({1}, 1.0))).value();
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(AwHead, ScalingKeyShiftsMassTowardIt)
{
    Graph g;
    Var q = g.constant(Tensor({2, 1}, {1, 1}));
    const Tensor k({2, 2}, {1, 0.5, 0.5, 1});
    Tensor k10 = k;
    k10(0, 0) *= 10;
    k10(1, 0) *= 10;
    const Tensor a = ops::softmax_rows(dot_scores(q, g.constant(k))).value();
    const Tensor b = ops::softmax_rows(dot_scores(q, g.constant(k10))).value();
    EXPECT_GT(b(0, 0), a(0, 0));
    // the cosine path is blind to the same scaling
    Var gamma = g.constant(Tensor({1}, 1.0));
    EXPECT_LT(max_abs_diff(cosine_attention(q, g.constant(k), gamma).value(), cosine_attention(q, g.constant(k10), gamma).value()), 1e-6);
}

TEST(AwHead, TwoKeyHandCase)
{
    Graph g;
    const Tensor s = dot_scores(g.constant(Tensor({2, 1}, {1, 2})), g.constant(Tensor({2, 2}, {1, 0, 1, 1}))).value();
    EXPECT_NEAR(s(0, 0), 3.0, 1e-12);
    EXPECT_NEAR(s(0, 1), 2.0, 1e-12);
    const Tensor a = ops::softmax_rows(g.constant(s)).value();
    EXPECT_NEAR(a(0, 0), std::exp(3.0) / (std::exp(3.0) + std::exp(2.0)), 1e-12);
}

TEST(AwHead, EmptyBankContributesNothing)
{
    ParamSet ps;
    Rng rng(1);
    HeadProjections h = make_head(ps, "h", 3, 2, rng);
    Graph g;
    EXPECT_FALSE(aw_head(g, Var(), g.constant(Tensor({2, 2, 2}, 1.0)), h).valid());
}

TEST(IwHead, SumsIdentityColumns)
{
    ParamSet ps;
    Rng rng(10);
    HeadProjections h = make_head(ps, "h", 3, 2, rng);
    Rng data(11);
    const Tensor vis = random_tensor({2, 2, 2}, data);
    const Tensor col = random_tensor({3, 1}, data), col2 = random_tensor({3, 1}, data);
    Graph g;
    auto wv = [&](const Tensor& c, int o) {
        double s = h.value.bias->value[static_cast<std::size_t>(o)];
        for (int i = 0; i < 3; ++i) s += h.value.weight->value[static_cast<std::size_t>(o) * 3 + i] * c[static_cast<std::size_t>(i)];
        return s;
    };
    const Tensor one = iw_head(g, g.constant(col), g.constant(vis), h).value();
    Tensor same({3, 2});
    for (int i = 0; i < 3; ++i) same(i, 0) = same(i, 1) = col[static_cast<std::size_t>(i)];
    const Tensor twice = iw_head(g, g.constant(same), g.constant(vis), h).value();
    Tensor pair({3, 2});
    for (int i = 0; i < 3; ++i) {
        pair(i, 0) = col[static_cast<std::size_t>(i)];
        pair(i, 1) = col2[static_cast<std::size_t>(i)];
    }
    const Tensor both = iw_head(g, g.constant(pair), g.constant(vis), h).value();
    for (int o = 0; o < 2; ++o)
        for (int p = 0; p < 4; ++p) {
            const std::size_t i = static_cast<std::size_t>(o) * 4 + p;
            EXPECT_NEAR(one[i], vis[i] * wv(col, o), 1e-12);
            EXPECT_NEAR(twice[i], 2.0 * one[i], 1e-12);
            EXPECT_NEAR(both[i], vis[i] * (wv(col, o) + wv(col2, o)), 1e-12);
        }
}

TEST(MergeHeads, Selectors)
{
    Rng rng(12);
    Graph g;
    Var a = g.constant(random_tensor({2, 2, 2}, rng)), b = g.constant(random_tensor({2, 2, 2}, rng)),
        c = g.constant(random_tensor({2, 2, 2}, rng));
    auto w = [&](double x) { return g.constant(Tensor({1}, x)); };
    EXPECT_EQ(merge_heads(a, b, c, w(1), w(0), w(0)).value(), a.value());
    for (double x : merge_heads(a, b, c, w(0), w(0), w(0)).value().values()) EXPECT_EQ(x, 0.0);
}

TEST(FusionStage, ReducesToSentenceHead)
{
    ParamSet ps;
    Rng rng(13);
    FusionStage stage(ps, "f", 3, 4, rng);
    stage.merge_weight(1).value.fill(0.0);
    stage.merge_weight(2).value.fill(0.0);
    Rng data(14);
    Graph g;
    textproc::SyntaxEmbeddings text;
    text.full = g.constant(random_tensor({3, 5}, data));
    text.attribute = text.full;
    text.identity = ops::gather_columns(text.full, {0});
    Var vis = g.constant(random_tensor({4, 2, 2}, data));
    const auto out = stage(g, vis, text);
    const double w1 = stage.merge_weight(0).value[0];
    const Tensor h1 = sentence_head(g, text.full, vis, stage.head(0), g.param(stage.gamma())).value();
    ASSERT_EQ(out.fused.shape(), vis.shape());
    for (std::size_t i = 0; i < h1.size(); ++i) EXPECT_NEAR(out.fused.value()[i], w1 * h1[i], 1e-12);
}

TEST(FusionStage, SoftmaxRowsSumToOne)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Graph g;
        Var q = g.constant(random_tensor({6, 16}, rng, -5, 5)), k = g.constant(random_tensor({6, 4}, rng, -5, 5));
        for (const Tensor& a : {ops::softmax_rows(cosine_attention(q, k, g.constant(Tensor({1}, 0.05)))).value(),
                                ops::softmax_rows(dot_scores(q, k)).value()})
            for (int r = 0; r < a.dim(0); ++r) EXPECT_NEAR(row_sum(a, r), 1.0, 1e-5);
    }
}

TEST(FusionStage, GammaClampKeepsItPositive)
{
    ParamSet ps;
    Rng rng(1);
    FusionStage stage(ps, "f", 3, 4, rng);
    stage.gamma().value[0] = -0.3;
    stage.clamp_gamma();
    EXPECT_EQ(stage.gamma().value[0], 1e-2);
}

TEST(FusionGradient, AllInputs)
{
    ParamSet ps;
    Rng rng(15);
    std::array<HeadProjections, 3> heads{make_head(ps, "a", 3, 2, rng), make_head(ps, "b", 3, 2, rng), make_head(ps, "c", 3, 2, rng)};
    Rng data(16);
    auto fn = [&](Graph& g, const std::vector<Var>& v) {
        Var text = v[0], vis = v[1];
        Var attr = ops::gather_columns(text, {1, 2}), ident = ops::gather_columns(text, {0});
        Var p = merge_heads(sentence_head(g, text, vis, heads[0], v[2]), aw_head(g, attr, vis, heads[1]),
                            iw_head(g, ident, vis, heads[2]), v[3], v[4], v[5]);
        return testkit::probe(p);
    };
    EXPECT_LT(gradient_error(fn, {random_tensor({3, 4}, data), random_tensor({2, 3, 3}, data), Tensor({1}, 0.8),
                                  Tensor({1}, 0.4), Tensor({1}, 0.3), Tensor({1}, 0.2)}),
              1e-3);
}

TEST(HeadImportance, NormalizedAbsoluteWeights)
{
    ParamSet ps;
    Rng rng(1);
    std::vector<FusionStage> stages;
    stages.emplace_back(ps, "s1", 3, 2, rng);
    stages.emplace_back(ps, "s2", 3, 2, rng);
    const double w[2][3] = {{2, -1, 1}, {0, 3, 1}};
    for (int s = 0; s < 2; ++s)
        for (int k = 0; k < 3; ++k) stages[static_cast<std::size_t>(s)].merge_weight(k).value[0] = w[s][k];
    // mean |w|: (1, 2, 1) -> normalized (0.25, 0.5, 0.25)
    const auto imp = head_importance(stages);
    EXPECT_NEAR(imp[0], 0.25, 1e-12);
    EXPECT_NEAR(imp[1], 0.5, 1e-12);
    EXPECT_NEAR(imp[2], 0.25, 1e-12);
}
