#include "hazelab/autodiff.hpp"

#include <stdexcept>

namespace hazelab {

const Tensor4& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }
const Tensor4& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor4 value, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), Tensor4{}, requires_grad, nullptr});
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Tensor4 value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor4 value, std::span<const Var> inputs, BackwardFn backward) {
    bool needs = false;
    for (const Var& v : inputs) {
        check_owner(v, "record");
        needs = needs || nodes_[v.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), Tensor4{}, needs, needs ? std::move(backward) : nullptr});
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owner(const Var& v, const char* op) const {
    if (v.tape_ != this) throw std::invalid_argument(std::string(op) + ": variable belongs to a different tape");
}

Tensor4& Tape::grad_buffer(std::uint32_t id) {
    Node& node = nodes_[id];
    if (node.grad.shape() != node.value.shape()) node.grad = Tensor4(node.value.shape());
    return node.grad;
}

const Tensor4& Tape::grad(std::uint32_t id) { return grad_buffer(id); }

void Tape::backward(const Var& loss) {
    check_owner(loss, "backward");
    if (loss.shape() != Shape{1, 1, 1, 1}) {
        throw std::invalid_argument("backward: loss must have shape (1,1,1,1), got " + loss.shape().str());
    }
    for (Node& node : nodes_) node.grad = Tensor4{};
    visits_ = 0;
    grad_buffer(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.backward || node.grad.empty()) continue;
        ++visits_;
        node.backward(*this, node.grad);
    }
}

}  // namespace hazelab
