#pragma once

#include <string>

#include "sahm/autograd.hpp"
#include "sahm/ops.hpp"

// Small layer wrappers over ParamSet entries. Layers hold non-owning
// pointers into the ParamSet that created them.
namespace sahm::nn {

struct Conv {
    Parameter* weight = nullptr;
    Parameter* bias = nullptr;
    ops::ConvSpec spec;

    Var operator()(Graph& g, Var x) const;
    std::size_t param_count() const;
};

enum class Init { He, Xavier, Zero };

Conv make_conv(ParamSet& ps, const std::string& name, int in, int out, int kernel, ops::ConvSpec spec, Rng& rng,
               Init init = Init::He, bool bias = true);

/// Channel map applied at every pixel.
inline Conv make_pointwise(ParamSet& ps, const std::string& name, int in, int out, Rng& rng, Init init = Init::Xavier,
                           bool bias = true)
{
    return make_conv(ps, name, in, out, 1, {}, rng, init, bias);
}

struct LayerNorm {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;
    Var operator()(Graph& g, Var x) const;
};

LayerNorm make_layer_norm(ParamSet& ps, const std::string& name, int channels);

/// Pre-norm transformer block over a C x H x W map: windowed self-attention
/// followed by a pointwise MLP of width 2C, each with a residual add.
struct AttentionBlock {
    LayerNorm norm1, norm2;
    Conv q, k, v, out, fc1, fc2;
    int window = 4;

    Var operator()(Graph& g, Var x) const;
};

AttentionBlock make_attention_block(ParamSet& ps, const std::string& name, int channels, int window, Rng& rng);

/// x + conv(relu(conv(x))) with 3x3 kernels.
struct ResidualBlock {
    Conv a, b;
    Var operator()(Graph& g, Var x) const;
};

ResidualBlock make_residual_block(ParamSet& ps, const std::string& name, int channels, Rng& rng);

} // namespace sahm::nn
