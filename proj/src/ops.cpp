#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hazelab/autodiff.hpp"

namespace hazelab::ad {
namespace {

void same_tape(const Var& a, const Var& b, const char* op) {
    if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
}

template <typename F>
Tensor4 map(const Tensor4& x, F f) {
    Tensor4 out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

// Elementwise op whose derivative depends only on the input value.
template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
    const auto xi = x.id();
    return x.tape().record(map(x.value(), fwd), {x}, [xi, deriv](Tape& t, const Tensor4& g) {
        const Tensor4& xv = t.value(xi);
        Tensor4& dx = t.grad_buffer(xi);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(xv[i]);
    });
}

}  // namespace

Var add(const Var& a, const Var& b) {
    same_tape(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    Tensor4 out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    const auto ai = a.id(), bi = b.id();
    return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, const Tensor4& g) {
        for (auto id : {ai, bi}) {
            if (!t.requires_grad(id)) continue;
            Tensor4& d = t.grad_buffer(id);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    same_tape(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    Tensor4 out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    const auto ai = a.id(), bi = b.id();
    return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, const Tensor4& g) {
        if (t.requires_grad(ai)) {
            Tensor4& d = t.grad_buffer(ai);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
        if (t.requires_grad(bi)) {
            Tensor4& d = t.grad_buffer(bi);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    same_tape(a, b, "mul");
    require_same_shape(a.value(), b.value(), "mul");
    Tensor4 out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    const auto ai = a.id(), bi = b.id();
    return a.tape().record(std::move(out), {a, b}, [ai, bi](Tape& t, const Tensor4& g) {
        if (t.requires_grad(ai)) {
            const Tensor4& bv = t.value(bi);
            Tensor4& d = t.grad_buffer(ai);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
        }
        if (t.requires_grad(bi)) {
            const Tensor4& av = t.value(ai);
            Tensor4& d = t.grad_buffer(bi);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
        }
    });
}

Var affine(const Var& x, double scale, double shift) {
    return unary(
        x, [scale, shift](double v) { return scale * v + shift; }, [scale](double) { return scale; });
}

Var scale(const Var& x, double s) { return affine(x, s, 0.0); }

Var add_channel_bias(const Var& x, const Var& bias) {
    same_tape(x, bias, "add_channel_bias");
    const Shape xs = x.shape();
    const Shape bs = bias.shape();
    if (bs != Shape{1, xs.c, 1, 1}) {
        throw std::invalid_argument("add_channel_bias: bias " + bs.str() + " does not fit input " + xs.str());
    }
    Tensor4 out = x.value();
    for (std::size_t n = 0; n < xs.n; ++n)
        for (std::size_t c = 0; c < xs.c; ++c) {
            double* p = out.plane(n, c);
            const double b = bias.value()[c];
            for (std::size_t i = 0; i < xs.plane(); ++i) p[i] += b;
        }
    const auto xi = x.id(), bi = bias.id();
    return x.tape().record(std::move(out), {x, bias}, [xi, bi, xs](Tape& t, const Tensor4& g) {
        if (t.requires_grad(xi)) {
            Tensor4& d = t.grad_buffer(xi);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
        if (t.requires_grad(bi)) {
            Tensor4& d = t.grad_buffer(bi);
            for (std::size_t n = 0; n < xs.n; ++n)
                for (std::size_t c = 0; c < xs.c; ++c) {
                    const double* p = g.plane(n, c);
                    double acc = 0.0;
                    for (std::size_t i = 0; i < xs.plane(); ++i) acc += p[i];
                    d[c] += acc;
                }
        }
    });
}

Var relu(const Var& x) {
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
    auto sig = [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    };
    return unary(x, sig, [sig](double v) {
        const double s = sig(v);
        return s * (1.0 - s);
    });
}

Var log(const Var& x) {
    for (double v : x.value().data()) {
        if (!(v > 0.0)) throw std::domain_error("log: non-positive input");
    }
    return unary(
        x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var abs(const Var& x) {
    return unary(
        x, [](double v) { return std::abs(v); },
        [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var clamp(const Var& x, double lo, double hi) {
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var conv2d(const Var& x, const Var& kernel, std::size_t stride, std::size_t padding) {
    same_tape(x, kernel, "conv2d");
    Tensor4 out;
    kernels::conv2d_forward(x.value(), kernel.value(), stride, padding, out);
    const auto xi = x.id(), ki = kernel.id();
    return x.tape().record(std::move(out), {x, kernel}, [xi, ki, stride, padding](Tape& t, const Tensor4& g) {
        if (t.requires_grad(xi)) kernels::conv2d_backward_input(g, t.value(ki), stride, padding, t.grad_buffer(xi));
        if (t.requires_grad(ki)) kernels::conv2d_backward_kernel(g, t.value(xi), stride, padding, t.grad_buffer(ki));
    });
}

Var conv_transpose2d(const Var& x, const Var& kernel, std::size_t stride) {
    same_tape(x, kernel, "conv_transpose2d");
    const Shape xs = x.shape();
    const Shape ks = kernel.shape();
    if (ks.n != xs.c) {
        throw std::invalid_argument("conv_transpose2d: kernel " + ks.str() + " expects " + std::to_string(ks.n) +
                                    " input channels but input " + xs.str() + " has " + std::to_string(xs.c));
    }
    if (stride == 0) throw std::invalid_argument("conv_transpose2d: stride must be >= 1");
    if (xs.h == 0 || xs.w == 0) throw std::invalid_argument("conv_transpose2d: empty input " + xs.str());
    Tensor4 out({xs.n, ks.c, (xs.h - 1) * stride + ks.h, (xs.w - 1) * stride + ks.w});
    kernels::conv2d_backward_input(x.value(), kernel.value(), stride, 0, out);
    const auto xi = x.id(), ki = kernel.id();
    return x.tape().record(std::move(out), {x, kernel}, [xi, ki, stride](Tape& t, const Tensor4& g) {
        if (t.requires_grad(xi)) {
            Tensor4 dx;
            kernels::conv2d_forward(g, t.value(ki), stride, 0, dx);
            Tensor4& d = t.grad_buffer(xi);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += dx[i];
        }
        if (t.requires_grad(ki)) kernels::conv2d_backward_kernel(t.value(xi), g, stride, 0, t.grad_buffer(ki));
    });
}

Var instance_norm(const Var& x, double eps) {
    const Shape s = x.shape();
    if (s.plane() < 2) throw std::invalid_argument("instance_norm: needs h*w >= 2, got " + s.str());
    Tensor4 out(s);
    std::vector<double> inv_std(s.n * s.c);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double* p = x.value().plane(n, c);
            double mean = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) mean += p[i];
            mean /= static_cast<double>(s.plane());
            double var = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) var += (p[i] - mean) * (p[i] - mean);
            var /= static_cast<double>(s.plane());
            const double is = 1.0 / std::sqrt(var + eps);
            inv_std[n * s.c + c] = is;
            double* o = out.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) o[i] = (p[i] - mean) * is;
        }
    const auto xi = x.id();
    const auto yi = static_cast<std::uint32_t>(x.tape().size());
    return x.tape().record(std::move(out), {x}, [xi, yi, s, inv_std = std::move(inv_std)](Tape& t, const Tensor4& g) {
        const Tensor4& y = t.value(yi);
        Tensor4& dx = t.grad_buffer(xi);
        const double m = static_cast<double>(s.plane());
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c) {
                const double* gp = g.plane(n, c);
                const double* yp = y.plane(n, c);
                double* dp = dx.plane(n, c);
                double gmean = 0.0, gymean = 0.0;
                for (std::size_t i = 0; i < s.plane(); ++i) {
                    gmean += gp[i];
                    gymean += gp[i] * yp[i];
                }
                gmean /= m;
                gymean /= m;
                const double is = inv_std[n * s.c + c];
                for (std::size_t i = 0; i < s.plane(); ++i) dp[i] += is * (gp[i] - gmean - yp[i] * gymean);
            }
    });
}

Var channel_min(const Var& x) {
    Tensor4 out;
    kernels::ArgminMap lookup;
    kernels::channel_min_forward(x.value(), out, lookup);
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, lookup = std::move(lookup)](Tape& t, const Tensor4& g) {
        kernels::scatter_by_lookup(g, lookup, t.grad_buffer(xi));
    });
}

MinPoolResult minpool_patch(const Var& x, std::size_t patch) {
    Tensor4 out;
    kernels::ArgminMap lookup;
    kernels::minpool_forward(x.value(), patch, out, lookup);
    const auto xi = x.id();
    Var v = x.tape().record(std::move(out), {x}, [xi, lookup](Tape& t, const Tensor4& g) {
        kernels::scatter_by_lookup(g, lookup, t.grad_buffer(xi));
    });
    return {v, std::move(lookup)};
}

Var concat_channels(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_channels: nothing to concatenate");
    const Shape s0 = parts.front().shape();
    std::size_t channels = 0;
    for (const Var& p : parts) {
        same_tape(parts.front(), p, "concat_channels");
        const Shape s = p.shape();
        if (s.n != s0.n || s.h != s0.h || s.w != s0.w) {
            throw std::invalid_argument("concat_channels: shape mismatch " + s0.str() + " vs " + s.str());
        }
        channels += s.c;
    }
    const Shape os{s0.n, channels, s0.h, s0.w};
    Tensor4 out(os);
    std::vector<std::uint32_t> ids;
    std::vector<std::size_t> widths;
    for (std::size_t n = 0; n < os.n; ++n) {
        std::size_t c0 = 0;
        for (const Var& p : parts) {
            const Tensor4& v = p.value();
            std::copy(v.plane(n, 0), v.plane(n, 0) + v.shape().c * os.plane(), out.plane(n, c0));
            c0 += v.shape().c;
        }
    }
    for (const Var& p : parts) {
        ids.push_back(p.id());
        widths.push_back(p.shape().c);
    }
    return parts.front().tape().record(std::move(out), parts, [ids, widths, os](Tape& t, const Tensor4& g) {
        for (std::size_t n = 0; n < os.n; ++n) {
            std::size_t c0 = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (t.requires_grad(ids[k])) {
                    Tensor4& d = t.grad_buffer(ids[k]);
                    const double* src = g.plane(n, c0);
                    double* dst = d.plane(n, 0);
                    for (std::size_t i = 0; i < widths[k] * os.plane(); ++i) dst[i] += src[i];
                }
                c0 += widths[k];
            }
        }
    });
}

Var slice_channels(const Var& x, std::size_t begin, std::size_t count) {
    const Shape s = x.shape();
    if (count == 0 || begin + count > s.c) {
        throw std::invalid_argument("slice_channels: [" + std::to_string(begin) + ", " +
                                    std::to_string(begin + count) + ") out of range for " + s.str());
    }
    const Shape os{s.n, count, s.h, s.w};
    Tensor4 out(os);
    for (std::size_t n = 0; n < s.n; ++n) {
        std::copy(x.value().plane(n, begin), x.value().plane(n, begin) + count * s.plane(), out.plane(n, 0));
    }
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, os, begin](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < os.n; ++n) {
            const double* src = g.plane(n, 0);
            double* dst = d.plane(n, begin);
            for (std::size_t i = 0; i < os.c * os.plane(); ++i) dst[i] += src[i];
        }
    });
}

Var global_avg_pool(const Var& x) {
    const Shape s = x.shape();
    Tensor4 out({s.n, s.c, 1, 1});
    const double inv = 1.0 / static_cast<double>(s.plane());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double* p = x.value().plane(n, c);
            double acc = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
            out.at(n, c, 0, 0) = acc * inv;
        }
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, s, inv](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t c = 0; c < s.c; ++c) {
                const double gv = g.at(n, c, 0, 0) * inv;
                double* p = d.plane(n, c);
                for (std::size_t i = 0; i < s.plane(); ++i) p[i] += gv;
            }
    });
}

Var diff_h(const Var& x) {
    const Shape s = x.shape();
    if (s.w < 2) throw std::invalid_argument("diff_h: width must be >= 2, got " + s.str());
    const Shape os{s.n, s.c, s.h, s.w - 1};
    Tensor4 out(os);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t xx = 0; xx + 1 < s.w; ++xx)
                    out.at(n, c, y, xx) = x.value().at(n, c, y, xx + 1) - x.value().at(n, c, y, xx);
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, os](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < os.n; ++n)
            for (std::size_t c = 0; c < os.c; ++c)
                for (std::size_t y = 0; y < os.h; ++y)
                    for (std::size_t xx = 0; xx < os.w; ++xx) {
                        const double gv = g.at(n, c, y, xx);
                        d.at(n, c, y, xx + 1) += gv;
                        d.at(n, c, y, xx) -= gv;
                    }
    });
}

Var diff_v(const Var& x) {
    const Shape s = x.shape();
    if (s.h < 2) throw std::invalid_argument("diff_v: height must be >= 2, got " + s.str());
    const Shape os{s.n, s.c, s.h - 1, s.w};
    Tensor4 out(os);
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y + 1 < s.h; ++y)
                for (std::size_t xx = 0; xx < s.w; ++xx)
                    out.at(n, c, y, xx) = x.value().at(n, c, y + 1, xx) - x.value().at(n, c, y, xx);
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, os](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < os.n; ++n)
            for (std::size_t c = 0; c < os.c; ++c)
                for (std::size_t y = 0; y < os.h; ++y)
                    for (std::size_t xx = 0; xx < os.w; ++xx) {
                        const double gv = g.at(n, c, y, xx);
                        d.at(n, c, y + 1, xx) += gv;
                        d.at(n, c, y, xx) -= gv;
                    }
    });
}

Var sum(const Var& x) {
    double acc = 0.0;
    for (double v : x.value().data()) acc += v;
    const auto xi = x.id();
    return x.tape().record(Tensor4::scalar(acc), {x}, [xi](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
    });
}

Var mean(const Var& x) {
    if (x.value().empty()) throw std::invalid_argument("mean: empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var sum_per_sample(const Var& x) {
    const Shape s = x.shape();
    const std::size_t len = s.c * s.plane();
    Tensor4 out({s.n, 1, 1, 1});
    for (std::size_t n = 0; n < s.n; ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) acc += x.value()[n * len + i];
        out[n] = acc;
    }
    const auto xi = x.id();
    return x.tape().record(std::move(out), {x}, [xi, s, len](Tape& t, const Tensor4& g) {
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < s.n; ++n)
            for (std::size_t i = 0; i < len; ++i) d[n * len + i] += g[n];
    });
}

Var l2_norm_per_sample(const Var& x) {
    const Shape s = x.shape();
    const std::size_t len = s.c * s.plane();
    Tensor4 out({s.n, 1, 1, 1});
    for (std::size_t n = 0; n < s.n; ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) acc += x.value()[n * len + i] * x.value()[n * len + i];
        out[n] = std::sqrt(acc);
    }
    const auto xi = x.id();
    const auto yi = static_cast<std::uint32_t>(x.tape().size());
    return x.tape().record(std::move(out), {x}, [xi, yi, s, len](Tape& t, const Tensor4& g) {
        const Tensor4& xv = t.value(xi);
        const Tensor4& norms = t.value(yi);
        Tensor4& d = t.grad_buffer(xi);
        for (std::size_t n = 0; n < s.n; ++n) {
            if (norms[n] == 0.0) continue;
            const double k = g[n] / norms[n];
            for (std::size_t i = 0; i < len; ++i) d[n * len + i] += k * xv[n * len + i];
        }
    });
}

}  // namespace hazelab::ad
