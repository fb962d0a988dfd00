#include "gridcodec/nd/graph.hpp"

#include <stdexcept>

namespace gridcodec::nd {

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::leaf(Tensor value, bool requires_grad) {
    value.require_finite("leaf");
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* op_name) {
    value.require_finite(op_name);
    Node node;
    node.value = std::move(value);
    node.name = op_name;
    for (const Var& in : inputs) {
        if (&in.graph() != this) throw std::logic_error(std::string(op_name) + ": input from another graph");
        node.inputs.push_back(in.id());
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Graph::ensure_grad(Node& node) {
    if (!node.has_grad) {
        node.grad = Tensor::zeros_like(node.value);
        node.has_grad = true;
    }
    return node.grad;
}

void Graph::backward(Var loss) {
    if (backward_done_) throw std::logic_error("Graph::backward called twice");
    backward_done_ = true;
    Node& root = nodes_.at(loss.id());
    if (root.value.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(root.value.shape()));
    }
    ensure_grad(root).fill(1.0);

    std::vector<Tensor*> input_grads;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.has_grad || !node.backward) continue;
        input_grads.clear();
        for (std::size_t in : node.inputs) {
            if (in >= id) throw std::logic_error("internal error: graph cycle at node " + std::string(node.name));
            Node& input = nodes_[in];
            input_grads.push_back(input.requires_grad ? &ensure_grad(input) : nullptr);
        }
        node.backward(node.grad, input_grads);
    }

    for (Node& node : nodes_) {
        if (node.requires_grad) ensure_grad(node);
    }
}

const Tensor& Graph::grad(Var v) const {
    const Node& node = nodes_.at(v.id());
    if (!node.has_grad) throw std::logic_error("grad requested before backward or for a constant");
    return node.grad;
}

}  // namespace gridcodec::nd
