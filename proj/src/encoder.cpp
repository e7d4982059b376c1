#include "sahm/encoder.hpp"

#include <algorithm>
#include <stdexcept>

namespace sahm::encoder {

void EncoderConfig::validate() const
{
    auto bad = [](const std::string& what) { throw std::invalid_argument("encoder config: " + what); };
    if (patch < 1) bad("patch size must be >= 1, got " + std::to_string(patch));
    if (base_channels < 1) bad("base channels must be >= 1, got " + std::to_string(base_channels));
    if (blocks_per_stage < 0) bad("blocks per stage must be >= 0");
    if (window < 1) bad("window must be >= 1");
    const int unit = patch << (kStages - 1);
    if (input_side < unit || input_side % unit != 0)
        bad("input side " + std::to_string(input_side) + " must be a positive multiple of patch * 8 = " +
            std::to_string(unit));
}

int EncoderConfig::window_at(int stage) const
{
    const int s = side(stage);
    int w = std::min(window, s);
    while (s % w != 0) --w;
    return w;
}

void check_image(const Tensor& image, const EncoderConfig& config)
{
    const Shape expected{3, config.input_side, config.input_side};
    if (image.shape() != expected)
        throw std::invalid_argument("encode_image: expected image " + shape_str(expected) + ", got " +
                                    shape_str(image.shape()));
}

Encoder::Encoder(ParamSet& ps, const std::string& name, EncoderConfig config, Rng& rng) : config_(config)
{
    config_.validate();
    for (int i = 0; i < kStages; ++i) {
        const std::string sn = name + ".stage" + std::to_string(i + 1);
        const int in = i == 0 ? 3 : config_.channels(i - 1);
        const int k = i == 0 ? config_.patch : 2;
        Stage s;
        s.merge = nn::make_conv(ps, sn + ".merge", in, config_.channels(i), k, {k, 0, 0, 1}, rng, nn::Init::Xavier);
        for (int b = 0; b < config_.blocks_per_stage; ++b)
            s.blocks.push_back(nn::make_attention_block(ps, sn + ".block" + std::to_string(b), config_.channels(i),
                                                        config_.window_at(i), rng));
        stages_.push_back(std::move(s));
    }
}

Var Encoder::stage(Graph& g, int i, Var input) const
{
    const Stage& s = stages_.at(static_cast<std::size_t>(i));
    Var x = s.merge(g, input);
    for (const auto& b : s.blocks) x = b(g, x);
    return x;
}

FeaturePyramid Encoder::encode_image(Graph& g, Var image) const
{
    check_image(image.value(), config_);
    FeaturePyramid fp;
    Var x = image;
    for (int i = 0; i < kStages; ++i) x = fp.v[static_cast<std::size_t>(i)] = stage(g, i, x);
    return fp;
}

std::size_t Encoder::param_count() const
{
    std::size_t n = 0;
    for (const auto& s : stages_) {
        n += s.merge.param_count();
        for (const auto& b : s.blocks) {
            for (const nn::Conv* c : {&b.q, &b.k, &b.v, &b.out, &b.fc1, &b.fc2}) n += c->param_count();
            n += b.norm1.gain->value.size() + b.norm1.bias->value.size();
            n += b.norm2.gain->value.size() + b.norm2.bias->value.size();
        }
    }
    return n;
}

std::size_t encoder_param_count(const EncoderConfig& config)
{
    std::size_t n = 0;
    for (int i = 0; i < kStages; ++i) {
        const std::size_t c = static_cast<std::size_t>(config.channels(i));
        const std::size_t in = i == 0 ? 3 : c / 2;
        const std::size_t k = i == 0 ? static_cast<std::size_t>(config.patch) : 2;
        n += in * c * k * k + c;
        // q, k, v, out: 4(C^2 + C); fc1 + fc2: 4C^2 + 3C; two norms: 4C
        n += static_cast<std::size_t>(config.blocks_per_stage) * (8 * c * c + 11 * c);
    }
    return n;
}

} // namespace sahm::encoder
