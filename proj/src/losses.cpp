#include "hazelab/losses.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace hazelab::loss {
namespace {

void same_shape(const Var& a, const Var& b, const char* what) { require_same_shape(a.value(), b.value(), what); }

Var batch_mean(const Var& per_sample) {
    return ad::scale(ad::sum(per_sample), 1.0 / static_cast<double>(per_sample.shape().n));
}

Var norm_batch_mean(const Var& diff, NormMode mode) {
    if (mode == NormMode::kSquared) return batch_mean(ad::sum_per_sample(ad::mul(diff, diff)));
    return batch_mean(ad::l2_norm_per_sample(diff));
}

Var mean_abs_diff(const Var& a, const Var& b) { return ad::mean(ad::abs(ad::sub(a, b))); }

}  // namespace

void LossWeights::validate() const {
    for (double v : {alpha, tv_weight, gamma, delta, epsilon}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and nonnegative");
    }
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed, std::vector<std::size_t> widths, std::size_t image_channels)
    : widths_(std::move(widths)) {
    if (widths_.empty()) throw std::invalid_argument("feature extractor needs at least one stage");
    stage_weights_.assign(widths_.size(), 1.0 / static_cast<double>(widths_.size()));
    std::mt19937_64 rng(seed);
    std::size_t in = image_channels;
    for (std::size_t s = 0; s < widths_.size(); ++s) {
        const std::size_t out = widths_[s];
        const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));
        std::uniform_real_distribution<double> u(-bound, bound);
        Tensor4 w({out, in, 3, 3});
        for (auto& v : w.data()) v = u(rng);
        params_.add("stage" + std::to_string(s) + ".w", std::move(w));
        params_.add("stage" + std::to_string(s) + ".b", Tensor4({1, out, 1, 1}));
        in = out;
    }
}

std::vector<Var> FeatureExtractor::stages(const Var& image) const {
    Tape& tape = image.tape();
    const net::BoundParams p(tape, params_, false);
    std::vector<Var> out;
    Var f = image;
    for (std::size_t s = 0; s < widths_.size(); ++s) {
        f = ad::conv2d(f, p[2 * s], 2, 1);
        f = ad::relu(ad::add_channel_bias(f, p[2 * s + 1]));
        out.push_back(f);
    }
    return out;
}

Var msl(const Var& pred, const Var& target, NormMode mode) {
    same_shape(pred, target, "msl");
    return norm_batch_mean(ad::sub(pred, target), mode);
}

Var perceptual(const Var& pred, const Var& target, const FeatureExtractor& fx, NormMode mode) {
    same_shape(pred, target, "perceptual");
    const std::size_t k = fx.perceptual_stage();
    const Var fp = fx.stages(pred)[k];
    const Var ft = fx.stages(target)[k];
    return norm_batch_mean(ad::sub(fp, ft), mode);
}

AdversarialLosses adversarial(const net::DiscriminatorConfig& config, const net::BoundParams& disc, const Var& real,
                              const Var& fake, GeneratorObjective objective) {
    same_shape(real, fake, "adversarial");
    const Var d_real = ad::clamp(net::discriminator_forward(config, disc, real), kLogClamp, 1.0 - kLogClamp);
    const Var d_fake = ad::clamp(net::discriminator_forward(config, disc, fake), kLogClamp, 1.0 - kLogClamp);
    const Var log_real = ad::mean(ad::log(d_real));
    const Var log_not_fake = ad::mean(ad::log(ad::affine(d_fake, -1.0, 1.0)));
    AdversarialLosses out;
    out.d_loss = ad::scale(ad::add(log_real, log_not_fake), -1.0);
    out.g_loss = objective == GeneratorObjective::kNonSaturating ? ad::scale(ad::mean(ad::log(d_fake)), -1.0)
                                                                  : log_not_fake;
    return out;
}

Var total_variation(const Var& pred) {
    // A single row or column has no neighbours in that direction.
    const Shape& s = pred.shape();
    if (s.h < 2 && s.w < 2) return batch_mean(ad::sum_per_sample(ad::scale(pred, 0.0)));
    if (s.h < 2) return batch_mean(ad::sum_per_sample(ad::abs(ad::diff_h(pred))));
    if (s.w < 2) return batch_mean(ad::sum_per_sample(ad::abs(ad::diff_v(pred))));
    const Var h = ad::sum_per_sample(ad::abs(ad::diff_h(pred)));
    const Var v = ad::sum_per_sample(ad::abs(ad::diff_v(pred)));
    return batch_mean(ad::add(h, v));
}

Var dark_channel(const Var& pred, std::size_t patch) {
    const Var unit = ad::affine(pred, 0.5, 0.5);
    const Var dark = ad::minpool_patch(ad::channel_min(unit), patch).out;
    // The dark channel is nonnegative for images in range, so |.| only matters out of range.
    return batch_mean(ad::sum_per_sample(ad::abs(dark)));
}

Var contrastive(const Var& hazy, const Var& clear, const Var& restored, const FeatureExtractor& fx) {
    same_shape(hazy, restored, "contrastive");
    same_shape(clear, restored, "contrastive");
    const auto gi = fx.stages(hazy);
    const auto gj = fx.stages(clear);
    const auto gr = fx.stages(restored);
    Var total;
    for (std::size_t s = 0; s < fx.stage_count(); ++s) {
        const Var term = ad::scale(ad::sub(mean_abs_diff(gj[s], gr[s]), mean_abs_diff(gi[s], gr[s])),
                                   fx.stage_weights()[s]);
        total = total.valid() ? ad::add(total, term) : term;
    }
    return total;
}

Var l1_reconstruction(const Var& clear, const Var& restored) {
    same_shape(clear, restored, "l1_reconstruction");
    return mean_abs_diff(clear, restored);
}

double LossReport::weighted_total(const LossWeights& w) const {
    return msl + w.alpha * pl + w.tv_weight * tv + w.gamma * dc + w.delta * adv_g + w.epsilon * cont;
}

LossReport& LossReport::operator+=(const LossReport& o) {
    msl += o.msl;
    pl += o.pl;
    adv_g += o.adv_g;
    adv_d += o.adv_d;
    tv += o.tv;
    dc += o.dc;
    cont += o.cont;
    total += o.total;
    return *this;
}

LossReport loss_total(LossReport r, const LossWeights& weights) {
    weights.validate();
    const std::pair<const char*, double> terms[] = {{"msl", r.msl}, {"pl", r.pl}, {"adv_g", r.adv_g},
                                                    {"adv_d", r.adv_d}, {"tv", r.tv}, {"dc", r.dc},
                                                    {"cont", r.cont}};
    for (const auto& [name, v] : terms) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string("loss term '") + name + "' is not finite");
    }
    r.total = r.weighted_total(weights);
    return r;
}

std::string csv_header() { return "step,epoch,lr,msl,pl,adv_g,adv_d,tv,dc,cont,total"; }

std::string csv_row(std::size_t step, std::size_t epoch, double lr, const LossReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", step, epoch, lr,
                  r.msl, r.pl, r.adv_g, r.adv_d, r.tv, r.dc, r.cont, r.total);
    return buf;
}

}  // namespace hazelab::loss
