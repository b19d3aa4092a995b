#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hazelab/tensor.hpp"

// Low-level numeric kernels. Each conv kernel has an OpenMP implementation
// and a serial reference in kernels::reference with identical semantics.
// Every output element is produced by exactly one thread in a fixed
// accumulation order, so results do not depend on the thread count.
namespace hazelab::kernels {

// Kernel layout is (out_channels, in_channels, kh, kw). Throws on channel
// mismatch, stride 0, or an empty output.
Shape conv2d_output_shape(const Shape& x, const Shape& k, std::size_t stride, std::size_t pad);

// y = conv2d(x, k). y is resized and overwritten.
void conv2d_forward(const Tensor4& x, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& y);
// dx += conv2d^T(dy, k). dx must already have the input shape.
void conv2d_backward_input(const Tensor4& dy, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& dx);
// dk += d<y, dy>/dk. dk must already have the kernel shape.
void conv2d_backward_kernel(const Tensor4& dy, const Tensor4& x, std::size_t stride, std::size_t pad, Tensor4& dk);

namespace reference {
void conv2d_forward(const Tensor4& x, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& y);
void conv2d_backward_input(const Tensor4& dy, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& dx);
void conv2d_backward_kernel(const Tensor4& dy, const Tensor4& x, std::size_t stride, std::size_t pad, Tensor4& dk);
}  // namespace reference

// The dark-channel lookup table: for every output pixel, the flat input
// index that won the patch minimum.
struct ArgminMap {
    Shape shape;
    std::vector<std::uint32_t> source;
};

// Patch minimum with replicate borders. The patch center is the initial
// candidate; the remaining cells are scanned row-major and replace it only
// when strictly smaller. Throws on an even patch.
void minpool_forward(const Tensor4& x, std::size_t patch, Tensor4& y, ArgminMap& lookup);

// Per-pixel minimum across channels, (n,c,h,w) -> (n,1,h,w). Ties go to the
// lowest channel index.
void channel_min_forward(const Tensor4& x, Tensor4& y, ArgminMap& lookup);

// dx[lookup[i]] += dy[i]
void scatter_by_lookup(const Tensor4& dy, const ArgminMap& lookup, Tensor4& dx);

}  // namespace hazelab::kernels
