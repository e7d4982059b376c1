#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sahm/decoder_inp.hpp"
#include "sahm/decoder_seg.hpp"
#include "sahm/encoder.hpp"
#include "sahm/fusion.hpp"
#include "sahm/textproc.hpp"

namespace sahm {

struct ModelConfig {
    encoder::EncoderConfig encoder;
    int text_dim = 32;
    int patch = 2;
    double theta = 0.5;
    int bottleneck_blocks = 2;
    int residual_blocks = 4;
    int refine_hidden = 8;

    void validate() const;
};

struct ForwardResult {
    textproc::SyntaxEmbeddings text;
    encoder::FeaturePyramid visual;
    std::array<fusion::FusionOutput, encoder::kStages> fusion;
    decoder_seg::SegPyramid seg;
    decoder_inp::InpPyramid inp;
    Var mask_logits; // 1 x H x W at input resolution
    Var fill;        // 3 x H x W proposal for the hole
    Tensor mask;     // binary, detached
    Var output;      // input outside the mask, fill inside

    /// Logit maps supervised by the segmentation loss, coarse to fine.
    std::vector<Var> seg_outputs() const;
    /// RGB maps supervised by the reconstruction loss, coarse to fine.
    std::vector<Var> rgb_outputs() const;
};

/// Complete removal network: text encoder, encoder with per-stage fusion,
/// segmentation and inpainting decoders and a full-resolution refinement
/// head that composes the final image.
class Model {
public:
    Model(ModelConfig config, int vocab_size, std::uint64_t seed);

    ForwardResult forward(Graph& g, const Tensor& image, const textproc::TokenizedExpression& expr,
                          std::span<const textproc::Role> tags) const;

    /// Projects constrained parameters back into range after an update.
    void after_update();

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const ModelConfig& config() const { return config_; }
    int vocab_size() const { return vocab_size_; }
    std::span<const fusion::FusionStage> fusion_stages() const { return fusion_; }
    const encoder::Encoder& encoder() const { return *encoder_; }

private:
    ModelConfig config_;
    int vocab_size_;
    ParamSet params_;
    std::unique_ptr<textproc::TextEncoder> text_;
    std::unique_ptr<encoder::Encoder> encoder_;
    std::vector<fusion::FusionStage> fusion_;
    std::unique_ptr<decoder_seg::SegDecoder> seg_;
    std::unique_ptr<decoder_inp::InpDecoder> inp_;
    std::array<nn::Conv, 3> refine_;
};

} // namespace sahm
