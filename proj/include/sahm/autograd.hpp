#pragma once

#include <deque>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sahm/tensor.hpp"

namespace sahm {

/// A trainable tensor with its accumulated gradient and optimizer moments.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor moment1;
    Tensor moment2;
    bool decay = true; // subject to decoupled weight decay
};

/// Ordered, name-addressed parameter registry. Pointers returned by add()
/// stay valid for the lifetime of the set.
class ParamSet {
public:
    ParamSet() = default;
    ParamSet(const ParamSet&) = delete;
    ParamSet& operator=(const ParamSet&) = delete;
    ParamSet(ParamSet&&) = default;
    ParamSet& operator=(ParamSet&&) = default;

    Parameter& add(const std::string& name, Tensor init, bool decay = true);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    std::size_t count() const;
    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::map<std::string, Parameter> params_;
};

class Graph;

/// Handle to a node of a Graph.
class Var {
public:
    Var() = default;
    Var(Graph* graph, int id) : graph_(graph), id_(id) {}

    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape(); }
    int dim(int axis) const { return value().dim(axis); }
    Graph& graph() const { return *graph_; }
    int id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    Graph* graph_ = nullptr;
    int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so iterating
/// backwards over ids is a valid topological order.
class Graph {
public:
    using Backward = std::function<void(Graph&, int self)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    Var input(Tensor value);
    Var param(Parameter& p);

    /// Appends an op node. The node requires grad when any input does; the
    /// closure is dropped otherwise.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

    bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].requires_grad; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    /// Gradient buffer for a node, zero-allocated on first access.
    Tensor& grad(int id);
    bool has_grad(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }
    const Tensor& grad_or_empty(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    void backward(Var scalar);

    /// Adds leaf gradients into Parameter::grad.
    void accumulate_parameter_grads() const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    std::unordered_map<Parameter*, int> param_ids_;
};

/// Parameter initializers draw from this engine so every module is
/// reproducible from a single seed.
using Rng = std::mt19937_64;

Tensor normal_tensor(Shape shape, double stddev, Rng& rng);
Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng);

} // namespace sahm
