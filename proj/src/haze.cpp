#include "hazelab/haze.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazelab/kernels.hpp"

namespace hazelab::haze {
namespace {

void require_rgb(const Tensor4& img, const char* what) {
    if (img.shape().c != 3) {
        throw std::invalid_argument(std::string(what) + ": expected 3 channels, got " + img.shape().str());
    }
}

void require_map_for(const Tensor4& img, const Tensor4& map, const char* what) {
    const Shape a = img.shape();
    const Shape b = map.shape();
    if (b.c != 1 || b.n != a.n || b.h != a.h || b.w != a.w) {
        throw std::invalid_argument(std::string(what) + ": map " + b.str() + " does not match image " + a.str());
    }
}

}  // namespace

void HazeScene::validate() const {
    require_rgb(clear, "HazeScene");
    require_map_for(clear, depth, "HazeScene");
    for (double v : clear.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("HazeScene: clear image values must lie in [0,1]");
    }
    for (double v : depth.data()) {
        if (!(v >= 0.0)) throw std::invalid_argument("HazeScene: depth must be nonnegative");
    }
    if (!(beta > 0.0)) throw std::invalid_argument("HazeScene: beta must be positive");
    for (double a : airlight) {
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("HazeScene: airlight components must lie in (0,1]");
    }
}

Tensor4 transmission_from_depth(const Tensor4& depth, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("transmission_from_depth: beta must be positive");
    Tensor4 t(depth.shape());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!(depth[i] >= 0.0)) throw std::invalid_argument("transmission_from_depth: negative depth");
        t[i] = std::exp(-beta * depth[i]);
    }
    return t;
}

Tensor4 synthesize_haze(const Tensor4& clear, const Tensor4& transmission, const Airlight& airlight) {
    require_rgb(clear, "synthesize_haze");
    require_map_for(clear, transmission, "synthesize_haze");
    const Shape s = clear.shape();
    Tensor4 out(s);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < 3; ++c) {
            const double* j = clear.plane(n, c);
            const double* t = transmission.plane(n, 0);
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) o[i] = j[i] * t[i] + airlight[c] * (1.0 - t[i]);
        }
    return out;
}

Tensor4 synthesize_haze(const HazeScene& scene) {
    scene.validate();
    return synthesize_haze(scene.clear, transmission_from_depth(scene.depth, scene.beta), scene.airlight);
}

Tensor4 invert_haze(const Tensor4& hazy, const Tensor4& transmission, const Airlight& airlight, double t_floor) {
    if (!(t_floor > 0.0)) throw std::invalid_argument("invert_haze: t_floor must be positive");
    require_rgb(hazy, "invert_haze");
    require_map_for(hazy, transmission, "invert_haze");
    const Shape s = hazy.shape();
    Tensor4 out(s);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < 3; ++c) {
            const double* im = hazy.plane(n, c);
            const double* t = transmission.plane(n, 0);
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) {
                // t == 1 means no haze; skip the (I - A) + A round trip so the pixel is returned bit-exact.
                const double j = t[i] == 1.0 ? im[i] : (im[i] - airlight[c]) / std::max(t[i], t_floor) + airlight[c];
                o[i] = std::clamp(j, 0.0, 1.0);
            }
        }
    return out;
}

Tensor4 dark_channel(const Tensor4& image, std::size_t patch) {
    Tensor4 mins, out;
    kernels::ArgminMap lookup;
    kernels::channel_min_forward(image, mins, lookup);
    kernels::minpool_forward(mins, patch, out, lookup);
    return out;
}

Airlight estimate_airlight(const Tensor4& hazy, double fraction, std::size_t patch) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("estimate_airlight: fraction must lie in (0,1]");
    }
    require_rgb(hazy, "estimate_airlight");
    const Shape s = hazy.shape();
    const std::size_t pixels = s.plane();
    const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pixels)));
    if (pixels == 0 || s.n == 0 || count == 0) throw std::invalid_argument("estimate_airlight: empty selection");
    const Tensor4 first = hazy.sample(0);
    const Tensor4 dark = dark_channel(first, patch);
    std::vector<std::size_t> order(pixels);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dark[a] > dark[b]; });
    Airlight a{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < std::min(count, pixels); ++k) {
        for (std::size_t c = 0; c < 3; ++c) a[c] += first.plane(0, c)[order[k]];
    }
    for (double& v : a) v /= static_cast<double>(std::min(count, pixels));
    return a;
}

Tensor4 dcp_dehaze(const Tensor4& hazy, const DcpOptions& options) {
    if (!(options.omega >= 0.0 && options.omega <= 1.0)) {
        throw std::invalid_argument("dcp_dehaze: omega must lie in [0,1]");
    }
    require_rgb(hazy, "dcp_dehaze");
    if (hazy.shape().n != 1) throw std::invalid_argument("dcp_dehaze: expects a single image, got " + hazy.shape().str());
    const Airlight a = estimate_airlight(hazy, options.airlight_fraction, options.patch);
    Tensor4 normalized(hazy.shape());
    for (std::size_t c = 0; c < 3; ++c) {
        const double ac = std::max(a[c], 1e-6);
        const double* src = hazy.plane(0, c);
        double* dst = normalized.plane(0, c);
        for (std::size_t i = 0; i < hazy.shape().plane(); ++i) dst[i] = src[i] / ac;
    }
    Tensor4 t = dark_channel(normalized, options.patch);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.0 - options.omega * t[i];
    return invert_haze(hazy, t, a, options.t_floor);
}

DepthKind parse_depth_kind(std::string_view name) {
    if (name == "constant") return DepthKind::kConstant;
    if (name == "ramp") return DepthKind::kRamp;
    if (name == "radial") return DepthKind::kRadial;
    throw std::invalid_argument("unknown depth kind '" + std::string(name) + "' (expected constant, ramp or radial)");
}

Tensor4 procedural_depth(DepthKind kind, std::size_t h, std::size_t w, double max_depth) {
    Tensor4 d({1, 1, h, w});
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double rmax = std::max(std::hypot(cy, cx), 1e-12);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double v = 1.0;
            if (kind == DepthKind::kRamp) {
                v = h > 1 ? 1.0 - static_cast<double>(y) / static_cast<double>(h - 1) : 1.0;
            } else if (kind == DepthKind::kRadial) {
                v = std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) / rmax;
            }
            d.at(0, 0, y, x) = max_depth * v;
        }
    return d;
}

Tensor4 procedural_clear_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    struct Region {
        double y, x;
        std::array<double, 3> color;
    };
    const std::size_t regions = 6;
    std::vector<Region> seeds(regions);
    for (auto& r : seeds) {
        r.y = u(rng) * static_cast<double>(h);
        r.x = u(rng) * static_cast<double>(w);
        const auto dark = static_cast<std::size_t>(u(rng) * 3.0) % 3;
        for (std::size_t c = 0; c < 3; ++c) r.color[c] = c == dark ? 0.05 * u(rng) : 0.25 + 0.7 * u(rng);
    }
    const std::array<double, 3> sky{0.80 + 0.1 * u(rng), 0.86 + 0.08 * u(rng), 0.92 + 0.08 * u(rng)};
    const std::size_t horizon = h / 4 + static_cast<std::size_t>(u(rng) * static_cast<double>(h / 8 + 1));
    const double fy = 0.2 + 0.6 * u(rng);
    const double fx = 0.2 + 0.6 * u(rng);

    Tensor4 img({1, 3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            if (y < horizon) {
                for (std::size_t c = 0; c < 3; ++c) img.at(0, c, y, x) = sky[c];
                continue;
            }
            const Region* best = &seeds.front();
            double best_d = 1e300;
            for (const auto& r : seeds) {
                const double d = std::hypot(r.y - static_cast<double>(y), r.x - static_cast<double>(x));
                if (d < best_d) {
                    best_d = d;
                    best = &r;
                }
            }
            const double shade = 0.75 + 0.25 * std::sin(fy * static_cast<double>(y)) * std::cos(fx * static_cast<double>(x));
            for (std::size_t c = 0; c < 3; ++c) {
                img.at(0, c, y, x) = std::clamp(best->color[c] * shade, 0.0, 1.0);
            }
        }
    return img;
}

}  // namespace hazelab::haze
