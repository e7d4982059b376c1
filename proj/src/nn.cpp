#include "sahm/nn.hpp"

#include <cmath>

namespace sahm::nn {

Var Conv::operator()(Graph& g, Var x) const
{
    return ops::conv2d(x, g.param(*weight), bias ? g.param(*bias) : Var{}, spec);
}

std::size_t Conv::param_count() const { return weight->value.size() + (bias ? bias->value.size() : 0); }

Conv make_conv(ParamSet& ps, const std::string& name, int in, int out, int kernel, ops::ConvSpec spec, Rng& rng,
               Init init, bool bias)
{
    const double fan_in = static_cast<double>(in) * kernel * kernel;
    Shape shape{out, in, kernel, kernel};
    Tensor w;
    switch (init) {
    case Init::He: w = normal_tensor(shape, std::sqrt(2.0 / fan_in), rng); break;
    case Init::Xavier: w = normal_tensor(shape, std::sqrt(1.0 / fan_in), rng); break;
    case Init::Zero: w = Tensor(shape); break;
    }
    Conv c;
    c.weight = &ps.add(name + ".weight", std::move(w));
    if (bias) c.bias = &ps.add(name + ".bias", Tensor({out}), false);
    c.spec = spec;
    return c;
}

Var LayerNorm::operator()(Graph& g, Var x) const
{
    return ops::layer_norm_channels(x, g.param(*gain), g.param(*bias));
}

LayerNorm make_layer_norm(ParamSet& ps, const std::string& name, int channels)
{
    return {&ps.add(name + ".gain", Tensor({channels}, 1.0), false), &ps.add(name + ".bias", Tensor({channels}), false)};
}

Var AttentionBlock::operator()(Graph& g, Var x) const
{
    Var h = norm1(g, x);
    Var a = ops::local_attention(q(g, h), k(g, h), v(g, h), window);
    Var x1 = ops::add(x, out(g, a));
    Var m = fc2(g, ops::relu(fc1(g, norm2(g, x1))));
    return ops::add(x1, m);
}

AttentionBlock make_attention_block(ParamSet& ps, const std::string& name, int channels, int window, Rng& rng)
{
    AttentionBlock b;
    b.norm1 = make_layer_norm(ps, name + ".norm1", channels);
    b.q = make_pointwise(ps, name + ".q", channels, channels, rng);
    b.k = make_pointwise(ps, name + ".k", channels, channels, rng);
    b.v = make_pointwise(ps, name + ".v", channels, channels, rng);
    b.out = make_pointwise(ps, name + ".out", channels, channels, rng);
    b.norm2 = make_layer_norm(ps, name + ".norm2", channels);
    b.fc1 = make_pointwise(ps, name + ".fc1", channels, 2 * channels, rng, Init::He);
    b.fc2 = make_pointwise(ps, name + ".fc2", 2 * channels, channels, rng);
    b.window = window;
    return b;
}

Var ResidualBlock::operator()(Graph& g, Var x) const { return ops::add(x, b(g, ops::relu(a(g, x)))); }

ResidualBlock make_residual_block(ParamSet& ps, const std::string& name, int channels, Rng& rng)
{
    return {make_conv(ps, name + ".a", channels, channels, 3, ops::ConvSpec::same(3), rng),
            make_conv(ps, name + ".b", channels, channels, 3, ops::ConvSpec::same(3), rng, Init::Xavier)};
}

} // namespace sahm::nn
