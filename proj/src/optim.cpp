#include "sahm/optim.hpp"

#include <cmath>

namespace sahm {

void AdamW::step(ParamSet& params, double lr)
{
    ++steps_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (auto& [_, p] : params) {
        if (p.moment1.shape() != p.value.shape()) p.moment1 = Tensor(p.value.shape());
        if (p.moment2.shape() != p.value.shape()) p.moment2 = Tensor(p.value.shape());
        if (p.decay && config_.weight_decay > 0.0) {
            const double shrink = 1.0 - lr * config_.weight_decay;
            for (double& v : p.value.values()) v *= shrink;
        }
        if (p.grad.empty()) continue;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double gi = p.grad[i];
            p.moment1[i] = config_.beta1 * p.moment1[i] + (1.0 - config_.beta1) * gi;
            p.moment2[i] = config_.beta2 * p.moment2[i] + (1.0 - config_.beta2) * gi * gi;
            const double mhat = p.moment1[i] / bc1;
            const double vhat = p.moment2[i] / bc2;
            p.value[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
        p.grad = Tensor();
    }
}

} // namespace sahm
