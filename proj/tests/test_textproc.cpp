#include <gtest/gtest.h>

#include "sahm/dataforge.hpp"
#include "sahm/textproc.hpp"
#include "crf_oracle.hpp"
#include "test_util.hpp"

using namespace sahm;
using namespace sahm::textproc;
using sahm::testkit::brute_force_decode;
using sahm::testkit::gradient_error;
using sahm::testkit::random_tensor;

namespace {

constexpr Role B_IW = Role::BeginIdentity, I_IW = Role::InsideIdentity, B_AW = Role::BeginAttribute,
               I_AW = Role::InsideAttribute, O = Role::Outside;

const Vocabulary& lexicon()
{
    static const Vocabulary v = dataforge::lexicon_vocabulary();
    return v;
}

// Shared trained tagger: training takes a few seconds.
const Tagger& trained_tagger()
{
    static const Tagger t = [] {
        Tagger tagger(lexicon().size(), TaggerConfig{}, 5);
        const auto corpus = dataforge::template_corpus(3000, 1);
        tagger.train(corpus, lexicon(), TaggerTrainConfig{});
        return tagger;
    }();
    return t;
}

} // namespace

TEST(Tokenize, WorkedExample)
{
    const auto e = tokenize("Train approaching with headlight on", lexicon());
    EXPECT_EQ(e.tokens, (std::vector<std::string>{"train", "approaching", "with", "headlight", "on"}));
    EXPECT_EQ(e.length(), 5);
    EXPECT_EQ(e.ids.size(), 5u);
}

TEST(Tokenize, SingleToken)
{
    const auto e = tokenize("train", lexicon());
    EXPECT_EQ(e.tokens, std::vector<std::string>{"train"});
    EXPECT_EQ(e.length(), 1);
}

TEST(Tokenize, NormalizesCaseSpacingAndPunctuation)
{
    EXPECT_EQ(tokenize("the RED   car.", lexicon()).tokens, (std::vector<std::string>{"the", "red", "car"}));
}

TEST(Tokenize, EmptyExpressionIsRejected)
{
    try {
        tokenize("  ?! ", lexicon());
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_STREQ(e.what(), "empty expression");
    }
}

TEST(Tokenize, UnknownWordsMapToUnknownId)
{
    const auto e = tokenize("the zebra", lexicon());
    EXPECT_EQ(e.ids[1], Vocabulary::kUnknown);
    EXPECT_NE(e.ids[0], Vocabulary::kUnknown);
}

TEST(Vocabulary, BijectiveAndSorted)
{
    const Vocabulary v({"car", "the", "apple", "car"});
    EXPECT_EQ(v.size(), 3 + Vocabulary::kSpecials);
    EXPECT_EQ(Vocabulary::kPad, 0);
    EXPECT_EQ(v.id("apple"), 2);
    EXPECT_EQ(v.id("car"), 3);
    EXPECT_EQ(v.id("the"), 4);
    for (int id = Vocabulary::kSpecials; id < v.size(); ++id) EXPECT_EQ(v.id(v.token(id)), id);
    EXPECT_EQ(Vocabulary::deserialize(v.serialize()).tokens(), v.tokens());
}

TEST(Bio, Validity)
{
    EXPECT_TRUE(is_valid_bio(std::vector<Role>{B_IW, I_IW, O, B_AW, I_AW}));
    EXPECT_FALSE(is_valid_bio(std::vector<Role>{I_IW}));
    EXPECT_FALSE(is_valid_bio(std::vector<Role>{O, I_AW}));
    EXPECT_FALSE(is_valid_bio(std::vector<Role>{B_IW, I_AW}));
    EXPECT_FALSE(is_valid_bio(std::vector<Role>{B_AW, I_AW, I_IW}));
}

TEST(CrfDecode, SingleStepArgmax)
{
    Tensor e({1, 5}, {3, 1, 0, 0, 0});
    EXPECT_EQ(crf_decode(e, Tensor({5, 5})), std::vector<Role>{B_IW});
}

TEST(CrfDecode, PathOptimumBeatsGreedy)
{
    // Greedy picks (B-IW, B-IW) = 2 + 2 - 5 = -1; the path optimum is
    // (B-IW, O) = 2 + 1.5 + 0 = 3.5.
    Tensor e({2, 5}, {2, 0, 0, 0, 1, 2, 0, 0, 0, 1.5});
    Tensor tr({5, 5});
    tr(0, 0) = -5.0;
    const auto path = crf_decode(e, tr);
    EXPECT_EQ(path, (std::vector<Role>{B_IW, O}));
    EXPECT_EQ(path, brute_force_decode(e, tr));
}

TEST(CrfDecode, TiesGoToLowestIndex)
{
    EXPECT_EQ(crf_decode(Tensor({3, 5}), Tensor({5, 5})), (std::vector<Role>{B_IW, B_IW, B_IW}));
}

TEST(CrfDecode, MatchesExhaustiveEnumeration)
{
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int t = 1 + trial % 4;
        const Tensor e = random_tensor({t, 5}, rng, -2, 2), tr = random_tensor({5, 5}, rng, -2, 2);
        ASSERT_EQ(crf_decode(e, tr), brute_force_decode(e, tr)) << "trial " << trial;
    }
}

TEST(CrfNll, MatchesLogSumExpOverPaths)
{
    Rng rng(8);
    const Tensor e = random_tensor({3, 5}, rng), tr = random_tensor({5, 5}, rng);
    const std::vector<Role> gold{B_AW, B_IW, O};
    double z = 0.0;
    for (int code = 0; code < 125; ++code) {
        std::vector<Role> p{static_cast<Role>(code / 25), static_cast<Role>(code / 5 % 5), static_cast<Role>(code % 5)};
        z += std::exp(path_score(e, tr, p));
    }
    Graph g;
    const double nll = crf_nll(g.constant(e), g.constant(tr), gold).value()[0];
    EXPECT_NEAR(nll, std::log(z) - path_score(e, tr, gold), 1e-10);
}

TEST(CrfNll, GradientMatchesFiniteDifferences)
{
    Rng rng(9);
    const std::vector<Role> gold{B_IW, I_IW, O, B_AW};
    EXPECT_LT(gradient_error([&](Graph&, const std::vector<Var>& v) { return crf_nll(v[0], v[1], gold); },
                             {random_tensor({4, 5}, rng), random_tensor({5, 5}, rng)}),
              1e-3);
}

TEST(Tagger, UntrainedOutputIsBioValidAndDeterministic)
{
    Tagger t(lexicon().size(), TaggerConfig{}, 3);
    Rng rng(1);
    for (int k = 0; k < 50; ++k) {
        std::vector<std::string> words;
        const int n = 1 + k % 6;
        for (int i = 0; i < n; ++i)
            words.push_back(lexicon().tokens()[std::uniform_int_distribution<std::size_t>(0, lexicon().tokens().size() - 1)(rng)]);
        const auto e = from_tokens(words, lexicon());
        const auto tags = t.tag(e);
        EXPECT_TRUE(is_valid_bio(tags));
        EXPECT_EQ(tags, t.tag(e));
    }
}

TEST(Tagger, NllGradientMatchesFiniteDifferences)
{
    Tagger t(lexicon().size(), TaggerConfig{4, 3}, 2);
    const auto e = tokenize("the red car", lexicon());
    const std::vector<Role> gold{O, B_AW, B_IW};
    Graph g;
    Var out = t.nll(g, e, gold);
    g.backward(out);
    g.accumulate_parameter_grads();
    for (const char* name : {"tagger.transitions", "tagger.emit.weight", "tagger.fw.weight"}) {
        Parameter& p = t.params().get(name);
        const Tensor base = p.value, analytic = p.grad;
        auto nll_at = [&](const Tensor& v) {
            p.value = v;
            Graph h;
            return t.nll(h, e, gold).value()[0];
        };
        for (std::size_t i = 0; i < base.size(); ++i) {
            Tensor up = base, down = base;
            up[i] += 1e-5;
            down[i] -= 1e-5;
            const double numeric = (nll_at(up) - nll_at(down)) / 2e-5;
            const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-7});
            EXPECT_LT(std::abs(analytic[i] - numeric) / scale, 1e-3) << name << "[" << i << "]";
        }
        p.value = base;
    }
}

TEST(Tagger, WorkedExampleRoles)
{
    const auto tags = trained_tagger().tag(tokenize("Train approaching with headlight on", lexicon()));
    EXPECT_EQ(tags, (std::vector<Role>{B_IW, B_AW, O, B_AW, I_AW}));
}

TEST(Tagger, LoneNoun)
{
    EXPECT_EQ(trained_tagger().tag(tokenize("train", lexicon())), std::vector<Role>{B_IW});
}

TEST(Tagger, TemplateSentence)
{
    EXPECT_EQ(trained_tagger().tag(tokenize("remove the blue circle", lexicon())), (std::vector<Role>{O, O, B_AW, B_IW}));
}

TEST(Tagger, HeldOutAccuracy)
{
    const auto held_out = dataforge::template_corpus(200, 777);
    EXPECT_GE(tagging_accuracy(trained_tagger(), held_out, lexicon()), 0.95);
}

TEST(ExtractEmbeddings, ShapesAndColumnIdentity)
{
    Rng rng(6);
    Graph g;
    Var full = g.constant(random_tensor({4, 5}, rng));
    Var fallback = g.constant(random_tensor({4, 1}, rng));
    const std::vector<Role> tags{B_IW, B_AW, O, B_AW, I_AW};
    const auto s = extract_embeddings(full, tags, fallback);
    EXPECT_EQ(s.full.shape(), (Shape{4, 5}));
    EXPECT_EQ(s.attribute.shape(), (Shape{4, 3}));
    EXPECT_EQ(s.identity.shape(), (Shape{4, 1}));
    EXPECT_FALSE(s.identity_fallback);
    for (int r = 0; r < 4; ++r) {
        EXPECT_EQ(s.identity.value()(r, 0), full.value()(r, 0));
        EXPECT_EQ(s.attribute.value()(r, 0), full.value()(r, 1));
        EXPECT_EQ(s.attribute.value()(r, 1), full.value()(r, 3));
        EXPECT_EQ(s.attribute.value()(r, 2), full.value()(r, 4));
    }
}

TEST(ExtractEmbeddings, AllOutsideUsesFallback)
{
    Rng rng(7);
    Graph g;
    Var full = g.constant(random_tensor({4, 3}, rng));
    Var fallback = g.constant(random_tensor({4, 1}, rng));
    const auto s = extract_embeddings(full, std::vector<Role>{O, O, O}, fallback);
    EXPECT_FALSE(s.attribute.valid());
    EXPECT_TRUE(s.attribute_empty);
    EXPECT_TRUE(s.identity_fallback);
    EXPECT_EQ(s.identity.value(), fallback.value());
}

TEST(ExtractEmbeddings, RejectsInvalidTags)
{
    Graph g;
    Var full = g.constant(Tensor({2, 2}));
    EXPECT_THROW(extract_embeddings(full, std::vector<Role>{O, I_IW}, g.constant(Tensor({2, 1}))), std::invalid_argument);
}

TEST(TextEncoder, OutputShape)
{
    ParamSet ps;
    Rng rng(1);
    TextEncoder enc(ps, "text", lexicon().size(), 8, rng);
    Graph g;
    EXPECT_EQ(enc.encode(g, tokenize("the red car on the left", lexicon())).shape(), (Shape{8, 6}));
}
