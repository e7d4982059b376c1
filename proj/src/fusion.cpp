#include "sahm/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace sahm::fusion {

HeadProjections make_head(ParamSet& ps, const std::string& name, int text_dim, int channels, Rng& rng)
{
    return {nn::make_pointwise(ps, name + ".query", channels, channels, rng),
            nn::make_pointwise(ps, name + ".key", text_dim, channels, rng),
            nn::make_pointwise(ps, name + ".value", text_dim, channels, rng)};
}

Var project_columns(Graph& g, const nn::Conv& map, Var columns)
{
    const int c = columns.dim(0), t = columns.dim(1);
    Var y = map(g, ops::reshape(columns, {c, 1, t}));
    return ops::reshape(y, {y.dim(0), t});
}

Projected project(Graph& g, Var text, Var visual, const HeadProjections& head)
{
    if (text.value().rank() != 2 || text.dim(1) < 1)
        throw std::invalid_argument("fusion project: text bank must be C_L x T with T >= 1, got " +
                                    shape_str(text.shape()));
    Var q = head.query(g, visual);
    return {project_columns(g, head.key, text), project_columns(g, head.value, text),
            ops::reshape(q, {q.dim(0), q.dim(1) * q.dim(2)})};
}

Var cosine_attention(Var queries, Var keys, Var gamma)
{
    Var q = ops::normalize_rows(ops::transpose(queries), kNormEps); // HW x C
    Var k = ops::normalize_rows(ops::transpose(keys), kNormEps);    // T x C
    return ops::scale_by(ops::matmul(q, ops::transpose(k)), ops::reciprocal(gamma));
}

Var dot_scores(Var queries, Var keys) { return ops::matmul(ops::transpose(queries), keys); }

Var attend(Var scores, Var values, int h, int w)
{
    if (scores.dim(0) != h * w || scores.dim(1) != values.dim(1))
        throw std::invalid_argument("attend: scores " + shape_str(scores.shape()) + " do not match values " +
                                    shape_str(values.shape()) + " on a " + std::to_string(h) + "x" +
                                    std::to_string(w) + " map");
    Var a = ops::softmax_rows(scores);
    Var gmat = ops::matmul(values, ops::transpose(a)); // C x HW
    return ops::reshape(gmat, {values.dim(0), h, w});
}

Var hadamard_fuse(Var visual, Var guide)
{
    if (visual.shape() != guide.shape())
        throw std::invalid_argument("hadamard_fuse: shape mismatch " + shape_str(visual.shape()) + " vs " +
                                    shape_str(guide.shape()));
    return ops::mul(visual, guide);
}

Var sentence_head(Graph& g, Var text, Var visual, const HeadProjections& head, Var gamma)
{
    Projected p = project(g, text, visual, head);
    Var scores = cosine_attention(p.queries, p.keys, gamma);
    return hadamard_fuse(visual, attend(scores, p.values, visual.dim(1), visual.dim(2)));
}

Var aw_head(Graph& g, Var attribute, Var visual, const HeadProjections& head)
{
    if (!attribute.valid()) return {};
    Projected p = project(g, attribute, visual, head);
    return hadamard_fuse(visual, attend(dot_scores(p.queries, p.keys), p.values, visual.dim(1), visual.dim(2)));
}

Var iw_head(Graph& g, Var identity, Var visual, const HeadProjections& head)
{
    if (!identity.valid() || identity.dim(1) < 1) throw std::invalid_argument("iw_head: identity bank is empty");
    Var vals = project_columns(g, head.value, identity);
    Var ones = g.constant(Tensor({identity.dim(1), 1}, 1.0));
    Var summed = ops::matmul(vals, ones);
    return hadamard_fuse(visual, ops::broadcast_spatial(summed, visual.dim(1), visual.dim(2)));
}

Var merge_heads(Var h1, Var h2, Var h3, Var w1, Var w2, Var w3)
{
    Var out;
    const std::array<std::pair<Var, Var>, 3> terms{{{h1, w1}, {h2, w2}, {h3, w3}}};
    for (const auto& [h, w] : terms) {
        if (!h.valid()) continue;
        if (out.valid() && out.shape() != h.shape())
            throw std::invalid_argument("merge_heads: shape mismatch " + shape_str(out.shape()) + " vs " +
                                        shape_str(h.shape()));
        Var term = ops::scale_by(h, w);
        out = out.valid() ? ops::add(out, term) : term;
    }
    if (!out.valid()) throw std::invalid_argument("merge_heads: no head to merge");
    return out;
}

FusionStage::FusionStage(ParamSet& ps, const std::string& name, int text_dim, int channels, Rng& rng)
{
    for (int k = 0; k < 3; ++k)
        heads_[static_cast<std::size_t>(k)] = make_head(ps, name + ".head" + std::to_string(k + 1), text_dim, channels, rng);
    gamma_ = &ps.add(name + ".gamma", Tensor({1}, 1.0), false);
    for (int k = 0; k < 3; ++k)
        merge_[static_cast<std::size_t>(k)] = &ps.add(name + ".merge" + std::to_string(k + 1), Tensor({1}, 1.0 / 3.0), false);
}

FusionOutput FusionStage::operator()(Graph& g, Var visual, const textproc::SyntaxEmbeddings& text) const
{
    FusionOutput out;
    out.heads[0] = sentence_head(g, text.full, visual, heads_[0], g.param(*gamma_));
    out.heads[1] = aw_head(g, text.attribute, visual, heads_[1]);
    out.heads[2] = iw_head(g, text.identity, visual, heads_[2]);
    out.attribute_empty = !out.heads[1].valid();
    out.fused = merge_heads(out.heads[0], out.heads[1], out.heads[2], g.param(*merge_[0]), g.param(*merge_[1]),
                            g.param(*merge_[2]));
    return out;
}

void FusionStage::clamp_gamma(double floor) const
{
    double& v = gamma_->value[0];
    if (!(v >= floor)) v = floor;
}

std::array<double, 3> head_importance(std::span<const FusionStage> stages)
{
    std::array<double, 3> imp{};
    for (const auto& s : stages)
        for (int k = 0; k < 3; ++k) imp[static_cast<std::size_t>(k)] += std::abs(s.merge_weight(k).value[0]);
    double total = imp[0] + imp[1] + imp[2];
    if (total <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    for (double& v : imp) v /= total;
    return imp;
}

} // namespace sahm::fusion
