#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sahm/autograd.hpp"
#include "sahm/ops.hpp"

namespace sahm::testkit {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    return uniform_tensor(std::move(shape), lo, hi, rng);
}

/// Builds a scalar from graph inputs.
using ScalarFn = std::function<Var(Graph&, const std::vector<Var>&)>;

inline double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs)
{
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.constant(t));
    return f(g, vars).value()[0];
}

/// Largest relative error between reverse-mode gradients and central
/// differences over every input entry. Entries where both gradients are
/// below `floor` in magnitude are compared absolutely against `floor`.
inline double gradient_error(const ScalarFn& f, std::vector<Tensor> inputs, double h = 1e-5, double floor = 1e-7)
{
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.input(t));
    Var out = f(g, vars);
    g.backward(out);
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor analytic = g.has_grad(vars[k].id()) ? vars[k].grad() : Tensor(inputs[k].shape());
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double saved = inputs[k][i];
            inputs[k][i] = saved + h;
            const double up = evaluate(f, inputs);
            inputs[k][i] = saved - h;
            const double down = evaluate(f, inputs);
            inputs[k][i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i];
            const double scale = std::max(std::abs(a), std::abs(numeric));
            const double err = scale < floor ? std::abs(a - numeric) / floor : std::abs(a - numeric) / scale;
            worst = std::max(worst, err);
        }
    }
    return worst;
}

/// Weighted sum with fixed random weights, so every output entry matters.
inline Var probe(Var x, std::uint64_t seed = 99)
{
    Rng rng(seed);
    Tensor w = uniform_tensor(x.shape(), -1.0, 1.0, rng);
    return ops::sum(ops::mul(x, x.graph().constant(std::move(w))));
}

} // namespace sahm::testkit
