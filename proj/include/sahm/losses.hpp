#pragma once

#include <string>
#include <vector>

#include "sahm/nn.hpp"
#include "sahm/optim.hpp"

namespace sahm::losses {

struct LossWeights {
    double rec = 5.0;
    double adv = 20.0;
};

struct LossReport {
    double seg = 0.0;
    double rec = 0.0;
    double adv = 0.0; // generator term
    double total = 0.0;
    double disc = 0.0; // discriminator term, logged separately
    std::vector<double> seg_scales;
    std::vector<double> rec_scales;
};

/// Throws unless every entry is 0 or 1.
void require_binary(const Tensor& mask, const char* what);

/// Sum over scales and full-resolution pixels of sigmoid cross-entropy; each
/// logit map is bilinearly upsampled to the target size first.
Var seg_loss(const std::vector<Var>& logits, const Tensor& gt_mask, std::vector<double>* per_scale = nullptr);

/// Sum over scales of the mean absolute error against the area-downsampled
/// ground truth.
Var rec_loss(const std::vector<Var>& rgb, const Tensor& gt_image, std::vector<double>* per_scale = nullptr);

/// Area-averaged downsampling of a C x H x W tensor to h x w (integer factors).
Tensor area_downsample(const Tensor& x, int h, int w);

inline constexpr double kLogEps = 1e-8;

/// -mean log(1 - D(fake)) - mean log D(real).
Var discriminator_term(Var d_fake, Var d_real);

/// -mean log D(fake).
Var generator_term(Var d_fake);

/// seg + w.rec * rec + w.adv * adv, together with the scalar report.
Var total_loss(Var seg, Var rec, Var adv, const LossWeights& w, LossReport& report);
LossReport compose(double seg, double rec, double adv, const LossWeights& w);

struct DiscriminatorLayer {
    nn::Conv conv;
    bool activation; // leaky ReLU after the conv
};

/// Patch discriminator producing a 1 x h x w grid of probabilities.
class PatchDiscriminator {
public:
    /// preset "rf16" (three convs, 16 px receptive field) or "small" (4 px).
    PatchDiscriminator(const std::string& preset, int base_channels, std::uint64_t seed);

    Var operator()(Graph& g, Var image) const;
    int receptive_field() const;

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    const std::string& preset() const { return preset_; }

private:
    std::string preset_;
    ParamSet params_;
    std::vector<DiscriminatorLayer> layers_;
};

/// One optimizer update of the discriminator on a detached fake and a real
/// image. Returns the discriminator term before the update.
double discriminator_step(PatchDiscriminator& disc, AdamW& opt, double lr, const Tensor& fake, const Tensor& real);

/// Batched form: the term is averaged over the pairs.
double discriminator_step(PatchDiscriminator& disc, AdamW& opt, double lr, const std::vector<Tensor>& fake,
                          const std::vector<Tensor>& real);

} // namespace sahm::losses
