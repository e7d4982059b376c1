#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "sahm/encoder.hpp"
#include "sahm/nn.hpp"

namespace sahm::decoder_seg {

/// S_1..S_4 and their mask logits at indices 0..3.
struct SegPyramid {
    std::array<Var, encoder::kStages> s;
    std::array<Var, encoder::kStages> logits;
};

struct AlignParams {
    nn::Conv reduce_seg;    // C_{i+1} -> C'_i, applied to S_{i+1}
    nn::Conv reduce_visual; // C_i -> C'_i
    nn::Conv offsets;       // f_1: 2 C'_i -> 18, 3x3, zero-initialized
    nn::Conv deform;        // f_2: C'_i -> C'_i, 3x3 deformable
    nn::Conv mask;          // C'_i -> 1
};

/// S_4 from P_4 through self-attention blocks.
Var init_bottleneck(Graph& g, Var p4, std::span<const nn::AttentionBlock> blocks);

struct Reduced {
    Var seg;    // S~_{i+1}
    Var visual; // V~_i
};

/// S~ = 1x1 reduction of the 2x bilinear upsampling of S_{i+1} (the two
/// commute, so the reduction runs first at the coarse size); V~ = 1x1
/// reduction of V_i.
Reduced upsample_reduce(Graph& g, Var seg_next, Var visual, const AlignParams& p);

/// f_1 over the channel concatenation of V~_i and S~_{i+1}; 18 channels.
Var predict_offsets(Graph& g, Var visual_reduced, Var seg_up, const AlignParams& p);

Var deform_align(Graph& g, Var seg_up, Var offsets, const AlignParams& p);

Var fuse_add(Var aligned, Var visual_reduced);

/// 1x1 projection to one logit channel, no activation.
Var mask_head(Graph& g, Var seg, const AlignParams& p);

struct SegDecoderConfig {
    int bottleneck_blocks = 2;
};

class SegDecoder {
public:
    SegDecoder(ParamSet& ps, const std::string& name, const encoder::EncoderConfig& enc, Rng& rng,
               SegDecoderConfig config = {});

    /// `fused` holds P_1..P_4; the deformable offsets are kept for inspection.
    SegPyramid operator()(Graph& g, const std::array<Var, encoder::kStages>& fused) const;

    const AlignParams& align(int stage) const { return align_.at(static_cast<std::size_t>(stage)); }
    int reduced_channels(int stage) const { return stage == 3 ? channels4_ : reduced_.at(static_cast<std::size_t>(stage)); }

private:
    std::vector<nn::AttentionBlock> bottleneck_;
    nn::Conv mask4_;
    std::array<AlignParams, 3> align_; // stages 0..2
    std::array<int, 3> reduced_{};
    int channels4_ = 0;
};

} // namespace sahm::decoder_seg
