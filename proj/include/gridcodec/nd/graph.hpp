#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridcodec/nd/tensor.hpp"

namespace gridcodec::nd {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
public:
    Var() = default;
    Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Graph& graph() const { return *graph_; }
    std::size_t id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

/// Receives the gradient of the node's output and accumulates into the
/// gradients of its inputs. Entries of `input_grads` are null for inputs
/// that do not require a gradient.
using BackwardFn = std::function<void(const Tensor& out_grad, std::span<Tensor* const> input_grads)>;

/// Reverse-mode tape. Nodes are appended in creation order, which is a
/// topological order, and backward() walks them in exact reverse.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    /// Appends an op node. The value is checked for NaN/Inf.
    Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* op_name);

    void backward(Var loss);

    /// Gradient of the last backward() loss w.r.t. `v`; zeros if `v` was unreachable.
    const Tensor& grad(Var v) const;

    const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        const char* name = "leaf";
    };

    Tensor& ensure_grad(Node& node);

    std::deque<Node> nodes_;  // stable addresses: ops may hold pointers to earlier values
    bool backward_done_ = false;
};

}  // namespace gridcodec::nd
