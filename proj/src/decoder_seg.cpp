#include "sahm/decoder_seg.hpp"

#include <stdexcept>

namespace sahm::decoder_seg {

Var init_bottleneck(Graph& g, Var p4, std::span<const nn::AttentionBlock> blocks)
{
    Var x = p4;
    for (const auto& b : blocks) x = b(g, x);
    return x;
}

Reduced upsample_reduce(Graph& g, Var seg_next, Var visual, const AlignParams& p)
{
    Var r = p.reduce_seg(g, seg_next);
    return {ops::resize_bilinear(r, 2 * r.dim(1), 2 * r.dim(2)), p.reduce_visual(g, visual)};
}

Var predict_offsets(Graph& g, Var visual_reduced, Var seg_up, const AlignParams& p)
{
    if (visual_reduced.dim(1) != seg_up.dim(1) || visual_reduced.dim(2) != seg_up.dim(2))
        throw std::invalid_argument("predict_offsets: spatial mismatch " + shape_str(visual_reduced.shape()) + " vs " +
                                    shape_str(seg_up.shape()));
    return p.offsets(g, ops::concat({visual_reduced, seg_up}));
}

Var deform_align(Graph& g, Var seg_up, Var offsets, const AlignParams& p)
{
    return ops::deform_conv2d(seg_up, offsets, g.param(*p.deform.weight),
                              p.deform.bias ? g.param(*p.deform.bias) : Var{});
}

Var fuse_add(Var aligned, Var visual_reduced)
{
    if (aligned.shape() != visual_reduced.shape())
        throw std::invalid_argument("fuse_add: shape mismatch " + shape_str(aligned.shape()) + " vs " +
                                    shape_str(visual_reduced.shape()));
    return ops::add(aligned, visual_reduced);
}

Var mask_head(Graph& g, Var seg, const AlignParams& p) { return p.mask(g, seg); }

SegDecoder::SegDecoder(ParamSet& ps, const std::string& name, const encoder::EncoderConfig& enc, Rng& rng,
                       SegDecoderConfig config)
{
    channels4_ = enc.channels(3);
    for (int b = 0; b < config.bottleneck_blocks; ++b)
        bottleneck_.push_back(nn::make_attention_block(ps, name + ".bottleneck" + std::to_string(b), channels4_,
                                                       enc.window_at(3), rng));
    mask4_ = nn::make_pointwise(ps, name + ".mask4", channels4_, 1, rng);
    for (int i = 2; i >= 0; --i) {
        const std::string sn = name + ".scale" + std::to_string(i + 1);
        const int c = enc.channels(i), cr = std::max(1, c / 2);
        const int c_next = i == 2 ? channels4_ : reduced_[static_cast<std::size_t>(i + 1)];
        reduced_[static_cast<std::size_t>(i)] = cr;
        AlignParams& a = align_[static_cast<std::size_t>(i)];
        a.reduce_seg = nn::make_pointwise(ps, sn + ".reduce_seg", c_next, cr, rng);
        a.reduce_visual = nn::make_pointwise(ps, sn + ".reduce_visual", c, cr, rng);
        a.offsets = nn::make_conv(ps, sn + ".offsets", 2 * cr, 18, 3, ops::ConvSpec::same(3), rng, nn::Init::Zero);
        a.deform = nn::make_conv(ps, sn + ".deform", cr, cr, 3, ops::ConvSpec::same(3), rng, nn::Init::Xavier);
        a.mask = nn::make_pointwise(ps, sn + ".mask", cr, 1, rng);
    }
}

SegPyramid SegDecoder::operator()(Graph& g, const std::array<Var, encoder::kStages>& fused) const
{
    SegPyramid out;
    out.s[3] = init_bottleneck(g, fused[3], bottleneck_);
    out.logits[3] = mask4_(g, out.s[3]);
    for (int i = 2; i >= 0; --i) {
        const AlignParams& a = align_[static_cast<std::size_t>(i)];
        Reduced r = upsample_reduce(g, out.s[static_cast<std::size_t>(i + 1)], fused[static_cast<std::size_t>(i)], a);
        Var offsets = predict_offsets(g, r.visual, r.seg, a);
        Var s = fuse_add(deform_align(g, r.seg, offsets, a), r.visual);
        out.s[static_cast<std::size_t>(i)] = s;
        out.logits[static_cast<std::size_t>(i)] = mask_head(g, s, a);
    }
    return out;
}

} // namespace sahm::decoder_seg
