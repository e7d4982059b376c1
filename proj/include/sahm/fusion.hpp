#pragma once

#include <array>
#include <span>
#include <string>

#include "sahm/nn.hpp"
#include "sahm/textproc.hpp"

namespace sahm::fusion {

inline constexpr double kNormEps = 1e-8;

/// 1x1 channel maps of one attention head.
struct HeadProjections {
    nn::Conv query; // C_i -> C_i
    nn::Conv key;   // C_L -> C_i
    nn::Conv value; // C_L -> C_i
};

HeadProjections make_head(ParamSet& ps, const std::string& name, int text_dim, int channels, Rng& rng);

struct Projected {
    Var keys;    // C_i x T
    Var values;  // C_i x T
    Var queries; // C_i x (H_i W_i), pixels row-major
};

/// Applies the head's projections to the text bank and the visual map.
Projected project(Graph& g, Var text, Var visual, const HeadProjections& head);

/// Applies a 1x1 map to the columns of a C x T matrix.
Var project_columns(Graph& g, const nn::Conv& map, Var columns);

/// (H W) x T cosine scores divided by gamma; norms are guarded by kNormEps.
Var cosine_attention(Var queries, Var keys, Var gamma);

/// (H W) x T raw dot-product scores.
Var dot_scores(Var queries, Var keys);

/// Row softmax of the scores, weighted sum of value columns, reshaped to C x h x w.
Var attend(Var scores, Var values, int h, int w);

/// Elementwise product; throws on shape mismatch.
Var hadamard_fuse(Var visual, Var guide);

Var sentence_head(Graph& g, Var text, Var visual, const HeadProjections& head, Var gamma);

/// Returns an invalid Var when `attribute` is invalid (no attribute words);
/// callers treat that as a zero contribution.
Var aw_head(Graph& g, Var attribute, Var visual, const HeadProjections& head);

/// Unit-weight sum of the value-projected identity columns, broadcast to
/// every pixel, then multiplied into the visual map.
Var iw_head(Graph& g, Var identity, Var visual, const HeadProjections& head);

/// w1 * h1 + w2 * h2 + w3 * h3. An invalid head contributes nothing.
Var merge_heads(Var h1, Var h2, Var h3, Var w1, Var w2, Var w3);

struct FusionOutput {
    Var fused;
    std::array<Var, 3> heads;
    bool attribute_empty = false;
};

/// Three-head syntax-aware fusion at one encoder stage.
class FusionStage {
public:
    FusionStage(ParamSet& ps, const std::string& name, int text_dim, int channels, Rng& rng);

    FusionOutput operator()(Graph& g, Var visual, const textproc::SyntaxEmbeddings& text) const;

    const HeadProjections& head(int k) const { return heads_.at(static_cast<std::size_t>(k)); }
    Parameter& gamma() const { return *gamma_; }
    Parameter& merge_weight(int k) const { return *merge_.at(static_cast<std::size_t>(k)); }

    /// Keeps gamma strictly positive after an optimizer step.
    void clamp_gamma(double floor = 1e-2) const;

private:
    std::array<HeadProjections, 3> heads_;
    Parameter* gamma_;
    std::array<Parameter*, 3> merge_;
};

/// Mean over stages of |W^k|, normalized to sum to one.
std::array<double, 3> head_importance(std::span<const FusionStage> stages);

} // namespace sahm::fusion
