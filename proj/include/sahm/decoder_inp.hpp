#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sahm/decoder_seg.hpp"
#include "sahm/encoder.hpp"
#include "sahm/nn.hpp"

namespace sahm::decoder_inp {

/// I_1..I_4 and RGB decodes of I_1..I_3 at indices 0..3 (rgb[3] is unused).
struct InpPyramid {
    std::array<Var, encoder::kStages> features;
    std::array<Var, encoder::kStages> rgb;
    std::array<Tensor, encoder::kStages> masks;       // binary hole masks M_i, 1 x H_i x W_i
    std::array<bool, encoder::kStages> fallback{};    // no exterior patch at this scale
};

/// Four residual blocks on P_4.
Var init_residual(Graph& g, Var p4, std::span<const nn::ResidualBlock> blocks);

/// sigmoid(logit) > theta, as a detached 0/1 tensor.
Tensor binarize_mask(const Tensor& logits, double theta);

/// Zeroes every channel at masked pixels. mask: 1 x H x W.
Var hole_out(Var features, const Tensor& mask);

/// Non-overlapping p x p patches on an H x W grid; a patch is interior when
/// any of its pixels is masked.
struct PatchGrid {
    int patch = 2;
    int rows = 0;
    int cols = 0;
    std::vector<int> interior; // row-major patch indices
    std::vector<int> exterior;

    static PatchGrid from_mask(const Tensor& mask, int patch);
    int total() const { return rows * cols; }
};

/// N x M cosine similarities between interior and exterior patches of
/// `features`, whose grid must already be aligned with `grid` at patch size
/// `feature_patch`. Returns nullopt when there is no exterior patch.
std::optional<Var> patch_similarity(Var features, const PatchGrid& grid, int feature_patch);

/// Similarity measured on the coarser map I_{i+1}: average pooling by
/// patch / 2 leaves one cell per p x p patch of scale i. `grid.patch` must be even.
std::optional<Var> cross_scale_similarity(Var coarse, const PatchGrid& grid);

/// Row softmax of the similarities.
Var attention_scores(Var similarities);

/// Interior patches of the result are sum_m alpha[n, m] * exterior patch m
/// of `source`; exterior patches are copied from `source`.
Var fill(Var alpha, Var source, const PatchGrid& grid);

struct HdcParams {
    nn::Conv a, b, c; // dilations 1, 2, 5
};
inline constexpr std::array<int, 3> kHdcRates{1, 2, 5};

HdcParams make_hdc(ParamSet& ps, const std::string& name, int channels, Rng& rng);

/// x + c(relu(b(relu(a(x))))).
Var hdc_refine(Graph& g, Var x, const HdcParams& p);

/// Receptive field of stacked 3x3 convolutions with the given dilations.
int receptive_field(std::span<const int> dilations);

Var rgb_head(Graph& g, Var features, const nn::Conv& head);

struct InpDecoderConfig {
    int residual_blocks = 4;
    int patch = 2;
    double theta = 0.5;
};

class InpDecoder {
public:
    InpDecoder(ParamSet& ps, const std::string& name, const encoder::EncoderConfig& enc,
               const decoder_seg::SegDecoder& seg, Rng& rng, InpDecoderConfig config = {});

    InpPyramid operator()(Graph& g, Var p4, const decoder_seg::SegPyramid& seg) const;

    /// One scale of the filling mapping, exposed for tests.
    Var fill_scale(Graph& g, int stage, Var coarse, Var seg_features, const Tensor& mask, bool* fallback) const;

    const InpDecoderConfig& config() const { return config_; }

private:
    InpDecoderConfig config_;
    std::vector<nn::ResidualBlock> residual_;
    std::array<HdcParams, 3> hdc_;
    std::array<nn::Conv, 3> rgb_;
    std::array<Parameter*, 3> context_; // learned fill for fully masked maps
};

} // namespace sahm::decoder_inp
