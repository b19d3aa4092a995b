#include "hazelab/wavelet.hpp"

#include <algorithm>
#include <stdexcept>

namespace hazelab::wavelet {
namespace {

constexpr double analysis_scale(HaarMode mode) { return mode == HaarMode::kPaper ? 1.0 : 0.5; }
constexpr double synthesis_scale(HaarMode mode) { return mode == HaarMode::kPaper ? 0.25 : 0.5; }

void require_even(const Shape& s) {
    if (s.h % 2 != 0 || s.w % 2 != 0) {
        throw std::invalid_argument("dwt2: input " + s.str() + " has odd height or width; pad it to even size first");
    }
}

void require_bands(const Shape& a, const Shape& b, const Shape& c, const Shape& d) {
    if (a != b || a != c || a != d) {
        throw std::invalid_argument("iwt2: band shapes differ: " + a.str() + " " + b.str() + " " + c.str() + " " +
                                    d.str());
    }
}

// Forward transform into four preallocated half-size bands.
void forward(const Tensor4& x, HaarMode mode, std::array<Tensor4*, 4> out) {
    const Shape s = x.shape();
    const HaarFilters f = HaarFilters::paper();
    const double k = analysis_scale(mode);
    const std::size_t oh = s.h / 2, ow = s.w / 2;
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    const double a = x.at(n, c, 2 * i, 2 * j);
                    const double b = x.at(n, c, 2 * i, 2 * j + 1);
                    const double cc = x.at(n, c, 2 * i + 1, 2 * j);
                    const double d = x.at(n, c, 2 * i + 1, 2 * j + 1);
                    for (std::size_t band = 0; band < 4; ++band) {
                        const Kernel2x2& w = f[band];
                        out[band]->at(n, c, i, j) = k * (w[0][0] * a + w[0][1] * b + w[1][0] * cc + w[1][1] * d);
                    }
                }
}

// Synthesis: every pixel of a 2x2 block is the filter-signed sum of the four
// coefficients. Accumulates into `out`.
void inverse(std::array<const Tensor4*, 4> bands, HaarMode mode, Tensor4& out) {
    const Shape s = bands[0]->shape();
    const HaarFilters f = HaarFilters::paper();
    const double k = synthesis_scale(mode);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t i = 0; i < s.h; ++i)
                for (std::size_t j = 0; j < s.w; ++j) {
                    double coef[4];
                    for (std::size_t band = 0; band < 4; ++band) coef[band] = bands[band]->at(n, c, i, j);
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            double v = 0.0;
                            for (std::size_t band = 0; band < 4; ++band) v += f[band][dy][dx] * coef[band];
                            out.at(n, c, 2 * i + dy, 2 * j + dx) += k * v;
                        }
                }
}

}  // namespace

HaarFilters HaarFilters::paper() {
    return HaarFilters{
        {{{1, 1}, {1, 1}}},
        {{{-1, -1}, {1, 1}}},
        {{{-1, 1}, {-1, 1}}},
        {{{1, -1}, {-1, 1}}},
    };
}

const Kernel2x2& HaarFilters::operator[](std::size_t band) const {
    switch (band) {
        case 0: return ll;
        case 1: return lh;
        case 2: return hl;
        case 3: return hh;
        default: throw std::out_of_range("Haar band index must be 0..3");
    }
}

WaveletBands dwt2(const Tensor4& x, HaarMode mode) {
    const Shape s = x.shape();
    require_even(s);
    const Shape hs{s.n, s.c, s.h / 2, s.w / 2};
    WaveletBands b{Tensor4(hs), Tensor4(hs), Tensor4(hs), Tensor4(hs)};
    forward(x, mode, {&b.ll, &b.lh, &b.hl, &b.hh});
    return b;
}

Tensor4 iwt2(const WaveletBands& bands, HaarMode mode) {
    require_bands(bands.ll.shape(), bands.lh.shape(), bands.hl.shape(), bands.hh.shape());
    const Shape s = bands.ll.shape();
    Tensor4 out({s.n, s.c, s.h * 2, s.w * 2});
    inverse({&bands.ll, &bands.lh, &bands.hl, &bands.hh}, mode, out);
    return out;
}

// The analysis and synthesis maps are transposes of each other up to the
// scale factors: synthesis = (k_syn / k_ana) * analysis^T. So each backward
// reuses the other direction.
BandVars dwt2(const Var& x, HaarMode mode) {
    WaveletBands b = dwt2(x.value(), mode);
    Tape& tape = x.tape();
    const auto xi = x.id();
    const double adj = analysis_scale(mode) / synthesis_scale(mode);
    // Bands are recorded as four outputs; each routes its gradient back alone.
    auto record_band = [&](Tensor4 value, std::size_t band) {
        return tape.record(std::move(value), {x}, [xi, band, mode, adj](Tape& t, const Tensor4& g) {
            const Tensor4 zero(g.shape());
            std::array<const Tensor4*, 4> parts{&zero, &zero, &zero, &zero};
            parts[band] = &g;
            Tensor4 dx(t.value(xi).shape());
            inverse(parts, mode, dx);
            Tensor4& d = t.grad_buffer(xi);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += adj * dx[i];
        });
    };
    return BandVars{record_band(std::move(b.ll), 0), record_band(std::move(b.lh), 1), record_band(std::move(b.hl), 2),
                    record_band(std::move(b.hh), 3)};
}

Var iwt2(const BandVars& bands, HaarMode mode) {
    require_bands(bands.ll.shape(), bands.lh.shape(), bands.hl.shape(), bands.hh.shape());
    Tape& tape = bands.ll.tape();
    const Shape s = bands.ll.shape();
    Tensor4 out({s.n, s.c, s.h * 2, s.w * 2});
    inverse({&bands.ll.value(), &bands.lh.value(), &bands.hl.value(), &bands.hh.value()}, mode, out);
    const std::array<std::uint32_t, 4> ids{bands.ll.id(), bands.lh.id(), bands.hl.id(), bands.hh.id()};
    const double adj = synthesis_scale(mode) / analysis_scale(mode);
    const std::array<Var, 4> inputs{bands.ll, bands.lh, bands.hl, bands.hh};
    return tape.record(std::move(out), inputs, [ids, mode, adj, s](Tape& t, const Tensor4& g) {
        Tensor4 ll(s), lh(s), hl(s), hh(s);
        forward(g, mode, {&ll, &lh, &hl, &hh});
        const std::array<const Tensor4*, 4> parts{&ll, &lh, &hl, &hh};
        for (std::size_t band = 0; band < 4; ++band) {
            if (!t.requires_grad(ids[band])) continue;
            Tensor4& d = t.grad_buffer(ids[band]);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += adj * (*parts[band])[i];
        }
    });
}

Tensor4 filter_kernel(std::size_t band, HaarMode mode) {
    const Kernel2x2 f = HaarFilters::paper()[band];
    const double k = analysis_scale(mode);
    return Tensor4({1, 1, 2, 2}, {k * f[0][0], k * f[0][1], k * f[1][0], k * f[1][1]});
}

Tensor4 normalize_for_display(const Tensor4& band) {
    Tensor4 out(band.shape(), 0.5);
    if (band.empty()) return out;
    const auto [lo, hi] = std::minmax_element(band.data().begin(), band.data().end());
    if (*hi - *lo <= 0.0) return out;
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < band.size(); ++i) out[i] = (band[i] - *lo) / range;
    return out;
}

}  // namespace hazelab::wavelet
