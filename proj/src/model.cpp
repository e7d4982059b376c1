#include "sahm/model.hpp"

#include <stdexcept>

namespace sahm {

void ModelConfig::validate() const
{
    encoder.validate();
    if (text_dim < 1) throw std::invalid_argument("model config: text_dim must be >= 1");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("model config: theta must lie in (0, 1)");
    if (refine_hidden < 1) throw std::invalid_argument("model config: refine_hidden must be >= 1");
}

std::vector<Var> ForwardResult::rgb_outputs() const { return {inp.rgb[2], inp.rgb[1], inp.rgb[0], output}; }
std::vector<Var> ForwardResult::seg_outputs() const { return {seg.logits[2], seg.logits[1], seg.logits[0], mask_logits}; }

Model::Model(ModelConfig config, int vocab_size, std::uint64_t seed) : config_(config), vocab_size_(vocab_size)
{
    config_.validate();
    Rng rng(seed);
    text_ = std::make_unique<textproc::TextEncoder>(params_, "text", vocab_size, config_.text_dim, rng);
    encoder_ = std::make_unique<encoder::Encoder>(params_, "encoder", config_.encoder, rng);
    fusion_.reserve(encoder::kStages);
    for (int i = 0; i < encoder::kStages; ++i)
        fusion_.emplace_back(params_, "fusion.stage" + std::to_string(i + 1), config_.text_dim,
                             config_.encoder.channels(i), rng);
    seg_ = std::make_unique<decoder_seg::SegDecoder>(params_, "seg", config_.encoder, rng,
                                                     decoder_seg::SegDecoderConfig{config_.bottleneck_blocks});
    inp_ = std::make_unique<decoder_inp::InpDecoder>(
        params_, "inp", config_.encoder, *seg_, rng,
        decoder_inp::InpDecoderConfig{config_.residual_blocks, config_.patch, config_.theta});
    const int h = config_.refine_hidden;
    refine_[0] = nn::make_conv(params_, "refine.conv1", 7, h, 3, ops::ConvSpec::same(3), rng);
    refine_[1] = nn::make_conv(params_, "refine.conv2", h, h, 3, ops::ConvSpec::same(3), rng);
    refine_[2] = nn::make_conv(params_, "refine.conv3", h, 4, 3, ops::ConvSpec::same(3), rng, nn::Init::Zero);
}

ForwardResult Model::forward(Graph& g, const Tensor& image, const textproc::TokenizedExpression& expr,
                             std::span<const textproc::Role> tags) const
{
    encoder::check_image(image, config_.encoder);
    ForwardResult r;
    r.text = textproc::extract_embeddings(text_->encode(g, expr), tags, text_->fallback(g));

    Var img = g.constant(image);
    Var x = img;
    std::array<Var, encoder::kStages> fused;
    for (int i = 0; i < encoder::kStages; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r.visual.v[k] = encoder_->stage(g, i, x);
        r.fusion[k] = fusion_[k](g, r.visual.v[k], r.text);
        fused[k] = r.fusion[k].fused;
        x = ops::add(r.visual.v[k], fused[k]);
    }
    r.seg = (*seg_)(g, fused);
    r.inp = (*inp_)(g, fused[3], r.seg);

    const int side = config_.encoder.input_side;
    Var mask_up = ops::resize_bilinear(r.seg.logits[0], side, side);
    Var rgb_up = ops::resize_bilinear(r.inp.rgb[0], side, side);
    Var h = ops::relu(refine_[0](g, ops::concat({img, mask_up, rgb_up})));
    h = ops::relu(refine_[1](g, h));
    Var delta = refine_[2](g, h);
    r.mask_logits = ops::add(mask_up, ops::slice_rows(delta, 0, 1));
    r.fill = ops::add(rgb_up, ops::slice_rows(delta, 1, 4));
    r.mask = decoder_inp::binarize_mask(r.mask_logits.value(), config_.theta);

    Tensor keep(image.shape()), hole(image.shape());
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < side; ++y)
            for (int xx = 0; xx < side; ++xx) {
                const double m = r.mask(0, y, xx);
                hole(c, y, xx) = m;
                keep(c, y, xx) = (1.0 - m) * image(c, y, xx);
            }
    r.output = ops::add(g.constant(std::move(keep)), ops::mul(r.fill, g.constant(std::move(hole))));
    return r;
}

void Model::after_update()
{
    for (const auto& f : fusion_) f.clamp_gamma();
}

} // namespace sahm
