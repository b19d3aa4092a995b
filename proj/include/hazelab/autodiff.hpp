#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "hazelab/kernels.hpp"
#include "hazelab/tensor.hpp"

namespace hazelab {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    Tape& tape() const { return *tape_; }
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Tensor4& value() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    // Gradient after Tape::backward; zeros when the node was not on any path.
    const Tensor4& grad() const;

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the record is
// topologically sorted by construction. Not thread-safe; use one tape per thread.
class Tape {
public:
    // Backward rule: receives the node's output gradient and accumulates into
    // the gradients of its inputs via Tape::grad_buffer.
    using BackwardFn = std::function<void(Tape&, const Tensor4& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor4 value, bool requires_grad);
    Var constant(Tensor4 value) { return leaf(std::move(value), false); }

    // Records an op output. requires_grad is inherited from the inputs; when
    // no input requires a gradient the backward rule is dropped.
    Var record(Tensor4 value, std::initializer_list<Var> inputs, BackwardFn backward);
    Var record(Tensor4 value, std::span<const Var> inputs, BackwardFn backward);

    // Reverse traversal from a (1,1,1,1) loss. Clears earlier gradients first.
    void backward(const Var& loss);

    const Tensor4& value(std::uint32_t id) const { return nodes_[id].value; }
    const Tensor4& grad(std::uint32_t id);
    bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
    // Mutable gradient for accumulation, allocated as zeros on first use.
    Tensor4& grad_buffer(std::uint32_t id);

    std::size_t size() const { return nodes_.size(); }
    // Number of backward rules executed by the last backward().
    std::size_t backward_visits() const { return visits_; }

    void check_owner(const Var& v, const char* op) const;

private:
    struct Node {
        Tensor4 value;
        Tensor4 grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::deque<Node> nodes_;
    std::size_t visits_ = 0;
};

// Differentiable operations. Every op throws std::invalid_argument on shape
// mismatch; no broadcasting except where the op says so.
namespace ad {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// a * x + b elementwise with scalar a, b.
Var affine(const Var& x, double scale, double shift);
Var scale(const Var& x, double s);

// Adds a (1,C,1,1) bias to every (n, c) plane.
Var add_channel_bias(const Var& x, const Var& bias);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var log(const Var& x);
Var abs(const Var& x);
// Gradient passes only where lo < x < hi.
Var clamp(const Var& x, double lo, double hi);

Var conv2d(const Var& x, const Var& kernel, std::size_t stride, std::size_t padding);
// Adjoint of conv2d with the same kernel (layout out,in,kh,kw); maps the
// kernel's out-channels back to its in-channels. out = (h-1)*stride + kh.
Var conv_transpose2d(const Var& x, const Var& kernel, std::size_t stride);

// Per (sample, channel): (x - mean) / sqrt(var + eps), biased variance.
Var instance_norm(const Var& x, double eps);

struct MinPoolResult {
    Var out;
    kernels::ArgminMap lookup;
};
Var channel_min(const Var& x);
MinPoolResult minpool_patch(const Var& x, std::size_t patch);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(const Var& x, std::size_t begin, std::size_t count);

// (n,c,h,w) -> (n,c,1,1)
Var global_avg_pool(const Var& x);
// Horizontal / vertical forward differences: (n,c,h,w-1) and (n,c,h-1,w).
Var diff_h(const Var& x);
Var diff_v(const Var& x);

// Reductions.
Var sum(const Var& x);                // -> (1,1,1,1)
Var mean(const Var& x);               // -> (1,1,1,1)
Var sum_per_sample(const Var& x);     // -> (n,1,1,1)
// Unsquared L2 norm per sample, (n,1,1,1). Subgradient 0 at a zero vector.
Var l2_norm_per_sample(const Var& x);

}  // namespace ad
}  // namespace hazelab
