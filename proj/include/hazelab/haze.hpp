#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "hazelab/tensor.hpp"

// Atmospheric scattering model, its inverse, and the dark channel prior
// baseline. All images here live in [0,1].
namespace hazelab::haze {

using Airlight = std::array<double, 3>;

struct HazeScene {
    Tensor4 clear;  // (n,3,h,w) in [0,1]
    Tensor4 depth;  // (n,1,h,w), >= 0
    double beta = 1.0;
    Airlight airlight{1.0, 1.0, 1.0};

    // Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

// t = exp(-beta * d), single channel, every value in (0,1].
Tensor4 transmission_from_depth(const Tensor4& depth, double beta);

// I = J t + A (1 - t)
Tensor4 synthesize_haze(const HazeScene& scene);
Tensor4 synthesize_haze(const Tensor4& clear, const Tensor4& transmission, const Airlight& airlight);

// J = (I - A) / max(t, t_floor) + A, clamped to [0,1].
Tensor4 invert_haze(const Tensor4& hazy, const Tensor4& transmission, const Airlight& airlight, double t_floor);

// min over the patch of min over channels; (n,c,h,w) -> (n,1,h,w).
Tensor4 dark_channel(const Tensor4& image, std::size_t patch);

// Per-channel mean over the brightest `fraction` of dark-channel pixels
// (count = ceil(fraction * h * w), ties broken by raster order). Uses sample 0.
Airlight estimate_airlight(const Tensor4& hazy, double fraction = 0.001, std::size_t patch = 3);

struct DcpOptions {
    double omega = 0.95;
    std::size_t patch = 3;
    double t_floor = 0.1;
    double airlight_fraction = 0.001;
};

// Dark channel prior restoration of one (1,3,h,w) image.
Tensor4 dcp_dehaze(const Tensor4& hazy, const DcpOptions& options = {});

// Procedural depth maps so synthesis needs no depth dataset.
enum class DepthKind { kConstant, kRamp, kRadial };
DepthKind parse_depth_kind(std::string_view name);
// Values in [0, max_depth]; ramp grows downward-to-upward (top of frame is far),
// radial grows from the center outward.
Tensor4 procedural_depth(DepthKind kind, std::size_t h, std::size_t w, double max_depth = 1.0);

// A synthetic outdoor-like clear image: a bright sky band on top and
// saturated colour regions below, so most patches have a near-zero channel.
Tensor4 procedural_clear_image(std::size_t h, std::size_t w, std::uint64_t seed);

}  // namespace hazelab::haze
