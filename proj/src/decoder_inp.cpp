#include "sahm/decoder_inp.hpp"

#include <stdexcept>

namespace sahm::decoder_inp {

Var init_residual(Graph& g, Var p4, std::span<const nn::ResidualBlock> blocks)
{
    Var x = p4;
    for (const auto& b : blocks) x = b(g, x);
    return x;
}

Tensor binarize_mask(const Tensor& logits, double theta)
{
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("binarize_mask: theta must lie in (0, 1)");
    Tensor m(logits.shape());
    const Tensor p = ops::sigmoid(logits);
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] > theta ? 1.0 : 0.0;
    return m;
}

Var hole_out(Var features, const Tensor& mask)
{
    const int c = features.dim(0), h = features.dim(1), w = features.dim(2);
    if (mask.shape() != Shape{1, h, w})
        throw std::invalid_argument("hole_out: mask " + shape_str(mask.shape()) + " for features " +
                                    shape_str(features.shape()));
    Tensor keep({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) keep(ch, y, x) = mask(0, y, x) > 0.5 ? 0.0 : 1.0;
    return ops::mul(features, features.graph().constant(std::move(keep)));
}

PatchGrid PatchGrid::from_mask(const Tensor& mask, int patch)
{
    if (mask.rank() != 3 || mask.dim(0) != 1) throw std::invalid_argument("PatchGrid: mask must be 1 x H x W, got " + shape_str(mask.shape()));
    const int h = mask.dim(1), w = mask.dim(2);
    if (patch < 1 || h % patch != 0 || w % patch != 0)
        throw std::invalid_argument("PatchGrid: patch " + std::to_string(patch) + " does not tile " + shape_str(mask.shape()));
    PatchGrid grid;
    grid.patch = patch;
    grid.rows = h / patch;
    grid.cols = w / patch;
    for (int py = 0; py < grid.rows; ++py)
        for (int px = 0; px < grid.cols; ++px) {
            bool masked = false;
            for (int dy = 0; dy < patch && !masked; ++dy)
                for (int dx = 0; dx < patch && !masked; ++dx) masked = mask(0, py * patch + dy, px * patch + dx) > 0.5;
            (masked ? grid.interior : grid.exterior).push_back(py * grid.cols + px);
        }
    return grid;
}

std::optional<Var> patch_similarity(Var features, const PatchGrid& grid, int feature_patch)
{
    if (features.dim(1) != grid.rows * feature_patch || features.dim(2) != grid.cols * feature_patch)
        throw std::invalid_argument("patch_similarity: map " + shape_str(features.shape()) + " does not match a " +
                                    std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
    if (grid.exterior.empty()) return std::nullopt;
    Var cols = ops::patches_to_columns(features, feature_patch);
    Var q = ops::normalize_rows(ops::transpose(ops::gather_columns(cols, grid.interior)), 1e-8);
    Var k = ops::normalize_rows(ops::transpose(ops::gather_columns(cols, grid.exterior)), 1e-8);
    return ops::matmul(q, ops::transpose(k));
}

std::optional<Var> cross_scale_similarity(Var coarse, const PatchGrid& grid)
{
    if (grid.patch % 2 != 0) throw std::invalid_argument("cross_scale_similarity: patch size must be even");
    Var pooled = grid.patch == 2 ? coarse : ops::avg_pool(coarse, grid.patch / 2);
    return patch_similarity(pooled, grid, 1);
}

Var attention_scores(Var similarities) { return ops::softmax_rows(similarities); }

Var fill(Var alpha, Var source, const PatchGrid& grid)
{
    const int c = source.dim(0), h = source.dim(1), w = source.dim(2);
    const int n = static_cast<int>(grid.interior.size()), m = static_cast<int>(grid.exterior.size());
    if (h != grid.rows * grid.patch || w != grid.cols * grid.patch)
        throw std::invalid_argument("fill: source " + shape_str(source.shape()) + " does not match the patch grid");
    if (alpha.shape() != Shape{n, m})
        throw std::invalid_argument("fill: scores " + shape_str(alpha.shape()) + ", expected " + shape_str({n, m}));
    if (n == 0) return source;
    Var cols = ops::patches_to_columns(source, grid.patch);
    Var ext = ops::gather_columns(cols, grid.exterior);
    Var inner = ops::matmul(ext, ops::transpose(alpha));
    Var all = ops::add(ops::scatter_columns(ext, grid.exterior, grid.total()),
                       ops::scatter_columns(inner, grid.interior, grid.total()));
    return ops::columns_to_patches(all, c, h, w, grid.patch);
}

HdcParams make_hdc(ParamSet& ps, const std::string& name, int channels, Rng& rng)
{
    HdcParams p;
    nn::Conv* convs[3] = {&p.a, &p.b, &p.c};
    for (int k = 0; k < 3; ++k) {
        const int rate = kHdcRates[static_cast<std::size_t>(k)];
        *convs[k] = nn::make_conv(ps, name + ".dil" + std::to_string(rate), channels, channels, 3,
                                  ops::ConvSpec::same(3, rate), rng, k == 2 ? nn::Init::Zero : nn::Init::He);
    }
    return p;
}

Var hdc_refine(Graph& g, Var x, const HdcParams& p)
{
    return ops::add(x, p.c(g, ops::relu(p.b(g, ops::relu(p.a(g, x))))));
}

int receptive_field(std::span<const int> dilations)
{
    int rf = 1;
    for (int d : dilations) rf += 2 * d;
    return rf;
}

Var rgb_head(Graph& g, Var features, const nn::Conv& head) { return head(g, features); }

InpDecoder::InpDecoder(ParamSet& ps, const std::string& name, const encoder::EncoderConfig& enc,
                       const decoder_seg::SegDecoder& seg, Rng& rng, InpDecoderConfig config)
    : config_(config)
{
    if (config_.patch < 2 || config_.patch % 2 != 0)
        throw std::invalid_argument("inpainting patch size must be even and >= 2, got " + std::to_string(config_.patch));
    for (int i = 0; i < 3; ++i)
        if (enc.side(i) % config_.patch != 0)
            throw std::invalid_argument("inpainting patch " + std::to_string(config_.patch) + " does not tile scale " +
                                        std::to_string(i + 1) + " of side " + std::to_string(enc.side(i)));
    for (int b = 0; b < config_.residual_blocks; ++b)
        residual_.push_back(nn::make_residual_block(ps, name + ".residual" + std::to_string(b), enc.channels(3), rng));
    for (int i = 0; i < 3; ++i) {
        const std::string sn = name + ".scale" + std::to_string(i + 1);
        const int c = seg.reduced_channels(i);
        hdc_[static_cast<std::size_t>(i)] = make_hdc(ps, sn + ".hdc", c, rng);
        // Zero-initialized decoders start from the identity refinement and a
        // black image; the seg-scale features are large, so random weights
        // would start far from any useful colour map.
        rgb_[static_cast<std::size_t>(i)] = nn::make_pointwise(ps, sn + ".rgb", c, 3, rng, nn::Init::Zero);
        context_[static_cast<std::size_t>(i)] = &ps.add(sn + ".context", Tensor({c, 1}), false);
    }
}

Var InpDecoder::fill_scale(Graph& g, int stage, Var coarse, Var seg_features, const Tensor& mask, bool* fallback) const
{
    const PatchGrid grid = PatchGrid::from_mask(mask, config_.patch);
    if (fallback) *fallback = false;
    if (grid.interior.empty()) return seg_features;
    auto sim = cross_scale_similarity(coarse, grid);
    if (!sim) {
        if (fallback) *fallback = true;
        return ops::broadcast_spatial(g.param(*context_.at(static_cast<std::size_t>(stage))), seg_features.dim(1),
                                      seg_features.dim(2));
    }
    return fill(attention_scores(*sim), hole_out(seg_features, mask), grid);
}

InpPyramid InpDecoder::operator()(Graph& g, Var p4, const decoder_seg::SegPyramid& seg) const
{
    InpPyramid out;
    out.features[3] = init_residual(g, p4, residual_);
    for (int i = 2; i >= 0; --i) {
        const auto k = static_cast<std::size_t>(i);
        out.masks[k] = binarize_mask(seg.logits[k].value(), config_.theta);
        bool fb = false;
        Var filled = fill_scale(g, i, out.features[k + 1], seg.s[k], out.masks[k], &fb);
        out.fallback[k] = fb;
        out.features[k] = hdc_refine(g, filled, hdc_[k]);
        out.rgb[k] = rgb_head(g, out.features[k], rgb_[k]);
    }
    return out;
}

} // namespace sahm::decoder_inp
