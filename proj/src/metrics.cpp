#include "hazelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hazelab::metrics {
namespace {

// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const double* src, std::size_t h, std::size_t w, const std::vector<double>& taps) {
    const std::size_t k = taps.size();
    const std::size_t oh = h - k + 1, ow = w - k + 1;
    std::vector<double> rows(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += taps[t] * src[y * w + x + t];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += taps[t] * rows[(y + t) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

}  // namespace

double psnr(const Tensor4& a, const Tensor4& b) {
    require_same_shape(a, b, "psnr");
    if (a.empty()) throw std::invalid_argument("psnr: empty images");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

std::vector<double> gaussian_taps(std::size_t window, double sigma) {
    if (window == 0 || !(sigma > 0.0)) throw std::invalid_argument("gaussian window needs size >= 1 and sigma > 0");
    std::vector<double> taps(window);
    const double c = (static_cast<double>(window) - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        const double d = static_cast<double>(i) - c;
        taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += taps[i];
    }
    for (auto& t : taps) t /= total;
    return taps;
}

double ssim(const Tensor4& a, const Tensor4& b, const SsimOptions& o) {
    require_same_shape(a, b, "ssim");
    const Shape s = a.shape();
    if (o.window > std::min(s.h, s.w) || o.window == 0) {
        throw std::invalid_argument("ssim: window " + std::to_string(o.window) + " exceeds image " + s.str());
    }
    const auto taps = gaussian_taps(o.window, o.sigma);
    const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
    const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);

    double total = 0.0;
    std::size_t planes = 0;
    std::vector<double> aa(s.plane()), bb(s.plane()), ab(s.plane());
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double* pa = a.plane(n, c);
            const double* pb = b.plane(n, c);
            for (std::size_t i = 0; i < s.plane(); ++i) {
                aa[i] = pa[i] * pa[i];
                bb[i] = pb[i] * pb[i];
                ab[i] = pa[i] * pb[i];
            }
            const auto mu_a = filter_valid(pa, s.h, s.w, taps);
            const auto mu_b = filter_valid(pb, s.h, s.w, taps);
            const auto e_aa = filter_valid(aa.data(), s.h, s.w, taps);
            const auto e_bb = filter_valid(bb.data(), s.h, s.w, taps);
            const auto e_ab = filter_valid(ab.data(), s.h, s.w, taps);
            double acc = 0.0;
            for (std::size_t i = 0; i < mu_a.size(); ++i) {
                const double va = e_aa[i] - mu_a[i] * mu_a[i];
                const double vb = e_bb[i] - mu_b[i] * mu_b[i];
                const double cov = e_ab[i] - mu_a[i] * mu_b[i];
                const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
                const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
                acc += num / den;
            }
            total += acc / static_cast<double>(mu_a.size());
            ++planes;
        }
    return total / static_cast<double>(planes);
}

MetricsReport evaluate_dataset(const std::string& method, const std::string& dataset,
                               const std::map<std::string, Tensor4>& outputs,
                               const std::map<std::string, Tensor4>& ground_truths, const SsimOptions& options) {
    std::vector<std::string> unmatched;
    for (const auto& [id, _] : outputs)
        if (!ground_truths.contains(id)) unmatched.push_back(id);
    for (const auto& [id, _] : ground_truths)
        if (!outputs.contains(id)) unmatched.push_back(id);
    if (!unmatched.empty()) {
        std::string msg = "evaluate_dataset: unmatched ids:";
        for (const auto& id : unmatched) msg += " " + id;
        throw std::invalid_argument(msg);
    }
    if (outputs.empty()) throw std::invalid_argument("evaluate_dataset: no images");

    MetricsReport report{method, dataset, {}, 0.0, 0.0};
    for (const auto& [id, out] : outputs) {  // std::map iterates in id order
        const Tensor4& gt = ground_truths.at(id);
        ImageScore score{id, psnr(out, gt), ssim(out, gt, options)};
        report.mean_psnr += score.psnr;
        report.mean_ssim += score.ssim;
        report.images.push_back(std::move(score));
    }
    report.mean_psnr /= static_cast<double>(report.images.size());
    report.mean_ssim /= static_cast<double>(report.images.size());
    return report;
}

TableRow summary_row(const MetricsReport& report) { return {report.method, report.mean_psnr, report.mean_ssim}; }

std::string format_csv(const std::vector<TableRow>& rows) {
    std::string out = "method,PSNR,SSIM\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.2f,%.3f\n", r.psnr, r.ssim);
        out += r.method + buf;
    }
    return out;
}

std::string format_table(const std::vector<TableRow>& rows) {
    std::size_t width = std::string("Method").size();
    for (const auto& r : rows) width = std::max(width, r.method.size());
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-*s  %7s  %6s\n", static_cast<int>(width), "Method", "PSNR", "SSIM");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %7.2f  %6.3f\n", static_cast<int>(width), r.method.c_str(), r.psnr,
                      r.ssim);
        out += buf;
    }
    return out;
}

}  // namespace hazelab::metrics
