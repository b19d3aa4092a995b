#pragma once

#include <array>

#include "hazelab/autodiff.hpp"
#include "hazelab/tensor.hpp"

namespace hazelab::wavelet {

// kPaper uses the unnormalized +/-1 Haar filters, so LL is the plain sum of a
// 2x2 block and the inverse carries the 1/4. kOrthonormal scales both the
// analysis filters and the synthesis by 1/2.
enum class HaarMode { kPaper, kOrthonormal };

using Kernel2x2 = std::array<std::array<double, 2>, 2>;

struct HaarFilters {
    Kernel2x2 ll;
    Kernel2x2 lh;
    Kernel2x2 hl;
    Kernel2x2 hh;

    static HaarFilters paper();
    const Kernel2x2& operator[](std::size_t band) const;
};

struct WaveletBands {
    Tensor4 ll;
    Tensor4 lh;
    Tensor4 hl;
    Tensor4 hh;

    const Shape& shape() const { return ll.shape(); }
};

// One level of the 2D Haar transform, each channel independently.
// Throws if h or w is odd.
WaveletBands dwt2(const Tensor4& x, HaarMode mode = HaarMode::kPaper);
// Exact inverse of dwt2. Throws if the bands disagree in shape.
Tensor4 iwt2(const WaveletBands& bands, HaarMode mode = HaarMode::kPaper);

struct BandVars {
    Var ll;
    Var lh;
    Var hl;
    Var hh;
};

// Differentiable versions recorded on the operands' tape.
BandVars dwt2(const Var& x, HaarMode mode = HaarMode::kPaper);
Var iwt2(const BandVars& bands, HaarMode mode = HaarMode::kPaper);

// Band i of filter set f as a (1,1,2,2) conv kernel.
Tensor4 filter_kernel(std::size_t band, HaarMode mode = HaarMode::kPaper);

// Linearly rescales a band to [0,1] for display; constant bands map to 0.5.
Tensor4 normalize_for_display(const Tensor4& band);

}  // namespace hazelab::wavelet
