#include <algorithm>
#include <stdexcept>

#include "hazelab/kernels.hpp"

namespace hazelab::kernels {
namespace {

// Inclusive range of output columns whose tap (out*stride + offset) lands in [0, extent).
struct Span {
    std::ptrdiff_t lo;
    std::ptrdiff_t hi;
    bool empty() const { return hi < lo; }
};

Span valid_outputs(std::ptrdiff_t offset, std::size_t stride, std::size_t extent, std::size_t out_extent) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    std::ptrdiff_t lo = 0;
    if (offset < 0) lo = (-offset + s - 1) / s;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(extent) - 1 - offset;
    if (last < 0) return {0, -1};
    std::ptrdiff_t hi = std::min<std::ptrdiff_t>(last / s, static_cast<std::ptrdiff_t>(out_extent) - 1);
    return {lo, hi};
}

}  // namespace

Shape conv2d_output_shape(const Shape& x, const Shape& k, std::size_t stride, std::size_t pad) {
    if (k.c != x.c) {
        throw std::invalid_argument("conv2d: kernel " + k.str() + " expects " + std::to_string(k.c) +
                                    " input channels but input " + x.str() + " has " + std::to_string(x.c));
    }
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be >= 1");
    const std::size_t ph = x.h + 2 * pad;
    const std::size_t pw = x.w + 2 * pad;
    if (ph < k.h || pw < k.w || x.n == 0 || k.n == 0) {
        throw std::invalid_argument("conv2d: zero-size output for input " + x.str() + ", kernel " + k.str() +
                                    ", pad " + std::to_string(pad));
    }
    return {x.n, k.n, (ph - k.h) / stride + 1, (pw - k.w) / stride + 1};
}

void conv2d_forward(const Tensor4& x, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& y) {
    const Shape os = conv2d_output_shape(x.shape(), k.shape(), stride, pad);
    if (y.shape() != os) y = Tensor4(os);
    const Shape xs = x.shape();
    const Shape ks = k.shape();
    const auto p = static_cast<std::ptrdiff_t>(pad);
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto total = static_cast<std::ptrdiff_t>(os.n * os.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t job = 0; job < total; ++job) {
        const std::size_t n = static_cast<std::size_t>(job) / os.c;
        const std::size_t co = static_cast<std::size_t>(job) % os.c;
        double* out = y.plane(n, co);
        std::fill(out, out + os.plane(), 0.0);
        for (std::size_t ci = 0; ci < xs.c; ++ci) {
            const double* in = x.plane(n, ci);
            const double* kk = k.plane(co, ci);
            for (std::size_t ky = 0; ky < ks.h; ++ky) {
                const Span rows = valid_outputs(static_cast<std::ptrdiff_t>(ky) - p, stride, xs.h, os.h);
                for (std::size_t kx = 0; kx < ks.w; ++kx) {
                    const double wv = kk[ky * ks.w + kx];
                    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - p;
                    const Span cols = valid_outputs(off, stride, xs.w, os.w);
                    if (rows.empty() || cols.empty()) continue;
                    for (std::ptrdiff_t oy = rows.lo; oy <= rows.hi; ++oy) {
                        const std::ptrdiff_t iy = oy * s + static_cast<std::ptrdiff_t>(ky) - p;
                        const double* row = in + iy * static_cast<std::ptrdiff_t>(xs.w);
                        double* orow = out + oy * static_cast<std::ptrdiff_t>(os.w);
                        if (stride == 1) {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) orow[ox] += wv * row[ox + off];
                        } else {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) orow[ox] += wv * row[ox * s + off];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const Tensor4& dy, const Tensor4& k, std::size_t stride, std::size_t pad, Tensor4& dx) {
    const Shape xs = dx.shape();
    const Shape ks = k.shape();
    const Shape os = conv2d_output_shape(xs, ks, stride, pad);
    if (dy.shape() != os) {
        throw std::invalid_argument("conv2d backward: gradient " + dy.shape().str() + " does not match output " +
                                    os.str());
    }
    const auto p = static_cast<std::ptrdiff_t>(pad);
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto total = static_cast<std::ptrdiff_t>(xs.n * xs.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t job = 0; job < total; ++job) {
        const std::size_t n = static_cast<std::size_t>(job) / xs.c;
        const std::size_t ci = static_cast<std::size_t>(job) % xs.c;
        double* din = dx.plane(n, ci);
        for (std::size_t co = 0; co < os.c; ++co) {
            const double* g = dy.plane(n, co);
            const double* kk = k.plane(co, ci);
            for (std::size_t ky = 0; ky < ks.h; ++ky) {
                const Span rows = valid_outputs(static_cast<std::ptrdiff_t>(ky) - p, stride, xs.h, os.h);
                for (std::size_t kx = 0; kx < ks.w; ++kx) {
                    const double wv = kk[ky * ks.w + kx];
                    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - p;
                    const Span cols = valid_outputs(off, stride, xs.w, os.w);
                    if (rows.empty() || cols.empty()) continue;
                    for (std::ptrdiff_t oy = rows.lo; oy <= rows.hi; ++oy) {
                        const std::ptrdiff_t iy = oy * s + static_cast<std::ptrdiff_t>(ky) - p;
                        double* drow = din + iy * static_cast<std::ptrdiff_t>(xs.w);
                        const double* grow = g + oy * static_cast<std::ptrdiff_t>(os.w);
                        if (stride == 1) {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) drow[ox + off] += wv * grow[ox];
                        } else {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) drow[ox * s + off] += wv * grow[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_kernel(const Tensor4& dy, const Tensor4& x, std::size_t stride, std::size_t pad, Tensor4& dk) {
    const Shape xs = x.shape();
    const Shape ks = dk.shape();
    const Shape os = conv2d_output_shape(xs, ks, stride, pad);
    if (dy.shape() != os) {
        throw std::invalid_argument("conv2d backward: gradient " + dy.shape().str() + " does not match output " +
                                    os.str());
    }
    const auto p = static_cast<std::ptrdiff_t>(pad);
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto total = static_cast<std::ptrdiff_t>(ks.n * ks.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t job = 0; job < total; ++job) {
        const std::size_t co = static_cast<std::size_t>(job) / ks.c;
        const std::size_t ci = static_cast<std::size_t>(job) % ks.c;
        double* kk = dk.plane(co, ci);
        for (std::size_t ky = 0; ky < ks.h; ++ky) {
            const Span rows = valid_outputs(static_cast<std::ptrdiff_t>(ky) - p, stride, xs.h, os.h);
            for (std::size_t kx = 0; kx < ks.w; ++kx) {
                const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - p;
                const Span cols = valid_outputs(off, stride, xs.w, os.w);
                if (rows.empty() || cols.empty()) continue;
                double acc = 0.0;
                for (std::size_t n = 0; n < xs.n; ++n) {
                    const double* g = dy.plane(n, co);
                    const double* in = x.plane(n, ci);
                    for (std::ptrdiff_t oy = rows.lo; oy <= rows.hi; ++oy) {
                        const std::ptrdiff_t iy = oy * s + static_cast<std::ptrdiff_t>(ky) - p;
                        const double* row = in + iy * static_cast<std::ptrdiff_t>(xs.w);
                        const double* grow = g + oy * static_cast<std::ptrdiff_t>(os.w);
                        if (stride == 1) {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) acc += grow[ox] * row[ox + off];
                        } else {
                            for (std::ptrdiff_t ox = cols.lo; ox <= cols.hi; ++ox) acc += grow[ox] * row[ox * s + off];
                        }
                    }
                }
                kk[ky * ks.w + kx] += acc;
            }
        }
    }
}

}  // namespace hazelab::kernels
