// Direct textbook loops. Kept for tests and the benchmark baseline.

#include <stdexcept>

#include "hazelab/kernels.hpp"

namespace hazelab::kernels::reference {
namespace {

bool tap(std::size_t o, std::size_t kidx, std::size_t stride, std::size_t pad, std::size_t extent, std::size_t& i) {
    const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(o * stride + kidx) - static_cast<std::ptrdiff_t>(pad);
    if (v < 0 || v >= static_cast<std::ptrdiff_t>(extent)) return false;
    i = static_cast<std::size_t>(v);
    return true;
}

}  // namespace

void conv2d_forward(const Tensor4& x, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& y) {
    const Shape os = conv2d_output_shape(x.shape(), k.shape(), stride, pad);
    y = Tensor4(os);
    const Shape xs = x.shape();
    const Shape ks = k.shape();
    for (std::size_t n = 0; n < os.n; ++n)
        for (std::size_t co = 0; co < os.c; ++co)
            for (std::size_t oy = 0; oy < os.h; ++oy)
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    double acc = 0.0;
                    for (std::size_t ci = 0; ci < xs.c; ++ci)
                        for (std::size_t ky = 0; ky < ks.h; ++ky)
                            for (std::size_t kx = 0; kx < ks.w; ++kx) {
                                std::size_t iy, ix;
                                if (!tap(oy, ky, stride, pad, xs.h, iy) || !tap(ox, kx, stride, pad, xs.w, ix)) continue;
                                acc += k.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
                            }
                    y.at(n, co, oy, ox) = acc;
                }
}

void conv2d_backward_input(const Tensor4& dy, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& dx) {
    const Shape xs = dx.shape();
    const Shape ks = k.shape();
    const Shape os = conv2d_output_shape(xs, ks, stride, pad);
    if (dy.shape() != os) throw std::invalid_argument("reference conv2d backward: gradient shape mismatch");
    for (std::size_t n = 0; n < os.n; ++n)
        for (std::size_t co = 0; co < os.c; ++co)
            for (std::size_t oy = 0; oy < os.h; ++oy)
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    const double g = dy.at(n, co, oy, ox);
                    for (std::size_t ci = 0; ci < xs.c; ++ci)
                        for (std::size_t ky = 0; ky < ks.h; ++ky)
                            for (std::size_t kx = 0; kx < ks.w; ++kx) {
                                std::size_t iy, ix;
                                if (!tap(oy, ky, stride, pad, xs.h, iy) || !tap(ox, kx, stride, pad, xs.w, ix)) continue;
                                dx.at(n, ci, iy, ix) += g * k.at(co, ci, ky, kx);
                            }
                }
}

void conv2d_backward_kernel(const Tensor4& dy, const Tensor4& x, std::size_t stride, std::size_t pad, Tensor4& dk) {
    const Shape xs = x.shape();
    const Shape ks = dk.shape();
    const Shape os = conv2d_output_shape(xs, ks, stride, pad);
    if (dy.shape() != os) throw std::invalid_argument("reference conv2d backward: gradient shape mismatch");
    for (std::size_t n = 0; n < os.n; ++n)
        for (std::size_t co = 0; co < os.c; ++co)
            for (std::size_t oy = 0; oy < os.h; ++oy)
                for (std::size_t ox = 0; ox < os.w; ++ox) {
                    const double g = dy.at(n, co, oy, ox);
                    for (std::size_t ci = 0; ci < xs.c; ++ci)
                        for (std::size_t ky = 0; ky < ks.h; ++ky)
                            for (std::size_t kx = 0; kx < ks.w; ++kx) {
                                std::size_t iy, ix;
                                if (!tap(oy, ky, stride, pad, xs.h, iy) || !tap(ox, kx, stride, pad, xs.w, ix)) continue;
                                dk.at(co, ci, ky, kx) += g * x.at(n, ci, iy, ix);
                            }
                }
}

}  // namespace hazelab::kernels::reference
