#include <algorithm>
#include <stdexcept>

#include "hazelab/kernels.hpp"

namespace hazelab::kernels {

void minpool_forward(const Tensor4& x, std::size_t patch, Tensor4& y, ArgminMap& lookup) {
    if (patch == 0 || patch % 2 == 0) {
        throw std::invalid_argument("minpool: patch size must be odd, got " + std::to_string(patch));
    }
    const Shape s = x.shape();
    y = Tensor4(s);
    lookup.shape = s;
    lookup.source.assign(s.numel(), 0);
    const auto r = static_cast<std::ptrdiff_t>(patch / 2);
    const auto H = static_cast<std::ptrdiff_t>(s.h);
    const auto W = static_cast<std::ptrdiff_t>(s.w);
    const auto total = static_cast<std::ptrdiff_t>(s.n * s.c);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t job = 0; job < total; ++job) {
        const std::size_t n = static_cast<std::size_t>(job) / s.c;
        const std::size_t c = static_cast<std::size_t>(job) % s.c;
        const double* in = x.plane(n, c);
        const std::size_t base = (n * s.c + c) * s.plane();
        for (std::ptrdiff_t oy = 0; oy < H; ++oy) {
            for (std::ptrdiff_t ox = 0; ox < W; ++ox) {
                std::ptrdiff_t best = oy * W + ox;
                double best_v = in[best];
                for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                    const std::ptrdiff_t iy = std::clamp<std::ptrdiff_t>(oy + dy, 0, H - 1);
                    for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                        const std::ptrdiff_t ix = std::clamp<std::ptrdiff_t>(ox + dx, 0, W - 1);
                        const double v = in[iy * W + ix];
                        if (v < best_v) {
                            best_v = v;
                            best = iy * W + ix;
                        }
                    }
                }
                const std::size_t o = base + static_cast<std::size_t>(oy * W + ox);
                y[o] = best_v;
                lookup.source[o] = static_cast<std::uint32_t>(base + static_cast<std::size_t>(best));
            }
        }
    }
}

void channel_min_forward(const Tensor4& x, Tensor4& y, ArgminMap& lookup) {
    const Shape s = x.shape();
    if (s.c == 0) throw std::invalid_argument("channel_min: input has no channels");
    const Shape os{s.n, 1, s.h, s.w};
    y = Tensor4(os);
    lookup.shape = os;
    lookup.source.assign(os.numel(), 0);
    for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t i = 0; i < s.plane(); ++i) {
            std::size_t best = x.index(n, 0, 0, 0) + i;
            for (std::size_t c = 1; c < s.c; ++c) {
                const std::size_t idx = x.index(n, c, 0, 0) + i;
                if (x[idx] < x[best]) best = idx;
            }
            y[n * s.plane() + i] = x[best];
            lookup.source[n * s.plane() + i] = static_cast<std::uint32_t>(best);
        }
    }
}

void scatter_by_lookup(const Tensor4& dy, const ArgminMap& lookup, Tensor4& dx) {
    if (dy.shape() != lookup.shape) {
        throw std::invalid_argument("scatter_by_lookup: gradient " + dy.shape().str() + " vs table " +
                                    lookup.shape.str());
    }
    for (std::size_t i = 0; i < dy.size(); ++i) dx[lookup.source[i]] += dy[i];
}

}  // namespace hazelab::kernels
