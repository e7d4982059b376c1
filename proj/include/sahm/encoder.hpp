#pragma once

#include <array>
#include <string>
#include <vector>

#include "sahm/nn.hpp"

namespace sahm::encoder {

inline constexpr int kStages = 4;

struct EncoderConfig {
    int input_side = 64;
    int patch = 4;
    int base_channels = 16;
    int blocks_per_stage = 2;
    int window = 4;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    int channels(int stage) const { return base_channels << stage; }     // stage 0..3
    int side(int stage) const { return input_side / patch >> stage; }    // stage 0..3
    int window_at(int stage) const;
};

/// V_1..V_4 stored at indices 0..3.
struct FeaturePyramid {
    std::array<Var, kStages> v;
};

/// Throws with expected and actual dimensions unless `image` is 3 x S x S.
void check_image(const Tensor& image, const EncoderConfig& config);

/// Hierarchical stand-in backbone: stage 1 embeds p x p patches, later stages
/// merge 2 x 2 neighbourhoods while doubling channels, and every stage ends
/// with windowed self-attention blocks.
class Encoder {
public:
    Encoder(ParamSet& ps, const std::string& name, EncoderConfig config, Rng& rng);

    /// Runs stage `i` (0-based) on its input map.
    Var stage(Graph& g, int i, Var input) const;

    /// Plain pyramid without fusion between stages.
    FeaturePyramid encode_image(Graph& g, Var image) const;

    const EncoderConfig& config() const { return config_; }
    std::size_t param_count() const;

private:
    struct Stage {
        nn::Conv merge;
        std::vector<nn::AttentionBlock> blocks;
    };
    EncoderConfig config_;
    std::vector<Stage> stages_;
};

/// Closed-form parameter count of an encoder built from `config`.
std::size_t encoder_param_count(const EncoderConfig& config);

} // namespace sahm::encoder
