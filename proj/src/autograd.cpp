#include "sahm/autograd.hpp"

#include <stdexcept>

namespace sahm {

Parameter& ParamSet::add(const std::string& name, Tensor init, bool decay)
{
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw std::invalid_argument("duplicate parameter name: " + name);
    Parameter& p = it->second;
    p.name = name;
    p.value = std::move(init);
    p.decay = decay;
    return p;
}

Parameter& ParamSet::get(const std::string& name)
{
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Parameter& ParamSet::get(const std::string& name) const
{
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

std::size_t ParamSet::count() const
{
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

void ParamSet::zero_grad()
{
    for (auto& [_, p] : params_) p.grad = Tensor();
}

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad_or_empty(id_); }

Var Graph::constant(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::input(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p)
{
    if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
    nodes_.push_back(Node{p.value, {}, {}, &p, true});
    int id = static_cast<int>(nodes_.size()) - 1;
    param_ids_.emplace(&p, id);
    return {this, id};
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, Backward backward)
{
    bool req = false;
    for (const Var& v : inputs) req = req || needs_grad(v);
    nodes_.push_back(Node{std::move(value), {}, req ? std::move(backward) : Backward{}, nullptr, req});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, Backward backward)
{
    bool req = false;
    for (const Var& v : inputs) req = req || needs_grad(v);
    nodes_.push_back(Node{std::move(value), {}, req ? std::move(backward) : Backward{}, nullptr, req});
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad(int id)
{
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() && n.value.size() > 0) n.grad = Tensor(n.value.shape());
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Graph::backward(Var scalar)
{
    if (scalar.value().size() != 1)
        throw std::invalid_argument("backward() needs a scalar, got shape " + shape_str(scalar.shape()));
    if (!needs_grad(scalar)) return;
    grad(scalar.id())[0] += 1.0;
    for (int id = scalar.id(); id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
        n.backward(*this, id);
    }
}

void Graph::accumulate_parameter_grads() const
{
    for (const auto& [param, id] : param_ids_) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.empty()) continue;
        if (param->grad.empty()) param->grad = Tensor(param->value.shape());
        param->grad += n.grad;
    }
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng)
{
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng)
{
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

} // namespace sahm
