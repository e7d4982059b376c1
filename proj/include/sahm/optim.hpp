#pragma once

#include <cstdint>

#include "sahm/autograd.hpp"

namespace sahm {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Adaptive-moment optimizer with decoupled weight decay. Moments live in
/// each Parameter so a ParamSet checkpoint carries the optimizer state.
class AdamW {
public:
    explicit AdamW(AdamWConfig config) : config_(config) {}

    /// Applies one update with learning rate `lr` and clears the gradients.
    void step(ParamSet& params, double lr);
    void step(ParamSet& params) { step(params, config_.lr); }

    std::int64_t steps() const { return steps_; }
    void set_steps(std::int64_t s) { steps_ = s; }
    const AdamWConfig& config() const { return config_; }

private:
    AdamWConfig config_;
    std::int64_t steps_ = 0;
};

} // namespace sahm
