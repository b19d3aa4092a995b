#include "hazelab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hazelab/checkpoint.hpp"

namespace hazelab::train {
namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("train config: " + msg);
}

// Separate streams so adding a consumer of one never shifts another.
constexpr std::uint64_t kDiscriminatorStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDataStream = 0xc2b2ae3d27d4eb4fULL;

Var weighted(const Var& x, double w) { return ad::scale(x, w); }

std::vector<Tensor4> add_grads(std::vector<Tensor4> a, const std::vector<Tensor4>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    return a;
}

// Edge-replicating pad of (n,c,h,w) to (n,c,ph,pw).
Tensor4 pad_replicate(const Tensor4& x, std::size_t ph, std::size_t pw) {
    const Shape s = x.shape();
    Tensor4 out({s.n, s.c, ph, pw});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
            const double* src = x.plane(n, c);
            double* dst = out.plane(n, c);
            for (std::size_t y = 0; y < ph; ++y)
                for (std::size_t xx = 0; xx < pw; ++xx)
                    dst[y * pw + xx] = src[std::min(y, s.h - 1) * s.w + std::min(xx, s.w - 1)];
        }
    return out;
}

Tensor4 unpad(const Tensor4& x, std::size_t h, std::size_t w) {
    const Shape s = x.shape();
    Tensor4 out({s.n, s.c, h, w});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < h; ++y)
                std::copy_n(x.plane(n, c) + y * s.w, w, out.plane(n, c) + y * w);
    return out;
}

class Cycler {
public:
    Cycler(std::size_t size, std::mt19937_64& rng) : order_(size), rng_(rng) { reshuffle(); }

    std::size_t next() {
        if (pos_ == order_.size()) reshuffle();
        return order_[pos_++];
    }

    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

private:
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::mt19937_64& rng_;
};

Tensor4 random_crop(const Tensor4& image, std::size_t size, std::mt19937_64& rng) {
    const Shape s = image.shape();
    std::uniform_int_distribution<std::size_t> dy(0, s.h - size), dx(0, s.w - size);
    const std::size_t y = dy(rng);
    const std::size_t x = dx(rng);
    return crop(image, y, x, size);
}

void check_image(const Tensor4& img, std::size_t crop_size, const std::string& id) {
    const Shape s = img.shape();
    if (s.n != 1 || s.c != 3 || s.h < crop_size || s.w < crop_size) {
        throw std::invalid_argument("image '" + id + "' has shape " + s.str() + ", need (1,3,>=" +
                                    std::to_string(crop_size) + ",>=" + std::to_string(crop_size) + ")");
    }
}

}  // namespace

TrainConfig TrainConfig::paper() {
    TrainConfig c;
    c.epochs = 300;
    c.decay_start_epoch = 150;
    c.crop = 256;
    c.discriminator.input_size = c.crop;
    return c;
}

TrainConfig TrainConfig::toy() {
    TrainConfig c;
    c.epochs = 10;
    c.decay_start_epoch = c.epochs / 2;
    c.crop = 32;
    // A few hundred steps cannot move a zero-initialized tail far at 1e-4;
    // keep the 100:1 decay ratio at a step size that fits the budget.
    c.lr_start = 1e-3;
    c.lr_end = 1e-5;
    return c;
}

void TrainConfig::validate() const {
    check(epochs >= 1, "epochs must be >= 1");
    check(decay_start_epoch < epochs, "decay_start_epoch must be below epochs");
    check(std::isfinite(lr_start) && std::isfinite(lr_end) && lr_start > lr_end && lr_end > 0.0,
          "need lr_start > lr_end > 0");
    check(d_update_period >= 1, "d_update_period must be >= 1");
    check(batch_labeled >= 1 && batch_unlabeled >= 1, "batch sizes must be >= 1");
    check(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          "adam betas must be in [0,1)");
    check(adam.eps > 0.0 && adam.weight_decay >= 0.0, "adam eps must be > 0 and weight_decay >= 0");
    check(contrastive_balance >= 0.0 && std::isfinite(contrastive_balance), "contrastive_balance must be >= 0");
    generator.validate();
    discriminator.validate();
    check(crop > 0 && crop % generator.size_multiple() == 0,
          "crop " + std::to_string(crop) + " must be divisible by " + std::to_string(generator.size_multiple()));
    check(discriminator.input_size == crop, "discriminator input_size " + std::to_string(discriminator.input_size) +
                                                " must equal crop " + std::to_string(crop));
    weights.validate();
}

double lr_at_epoch(std::size_t epoch, const TrainConfig& config) {
    if (epoch < 1 || epoch > config.epochs) {
        throw std::invalid_argument("lr_at_epoch: epoch " + std::to_string(epoch) + " outside [1, " +
                                    std::to_string(config.epochs) + "]");
    }
    if (epoch <= config.decay_start_epoch) return config.lr_start;
    const double span = static_cast<double>(config.epochs - config.decay_start_epoch);
    const double progress = static_cast<double>(epoch - config.decay_start_epoch);
    if (progress == span) return config.lr_end;
    return config.lr_start - (config.lr_start - config.lr_end) / span * progress;
}

OptimizerState OptimizerState::for_params(const net::ParamSet& params) {
    OptimizerState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.shape());
        s.v.emplace_back(p.value.shape());
    }
    return s;
}

void adam_step(net::ParamSet& params, std::span<const Tensor4> grads, OptimizerState& state, double lr,
               const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(grads[i].shape() == params[i].value.shape())) {
            throw std::invalid_argument("adam_step: gradient for '" + params[i].name + "' has shape " +
                                        grads[i].shape().str() + ", parameter has " +
                                        params[i].value.shape().str());
        }
        if (!grads[i].all_finite()) {
            throw std::invalid_argument("adam_step: non-finite gradient for '" + params[i].name + "'");
        }
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor4& theta = params[i].value;
        const Tensor4& g = grads[i];
        Tensor4& m = state.m[i];
        Tensor4& v = state.v[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double gj = g[j] + cfg.weight_decay * theta[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            theta[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
        }
    }
}

StepResult supervised_step(const net::GeneratorParams& gen, const net::DiscriminatorParams& disc,
                           const loss::FeatureExtractor& fx, const LabeledBatch& batch, const TrainConfig& config) {
    require_same_shape(batch.hazy, batch.clear, "supervised_step");
    if (batch.hazy.empty()) throw std::invalid_argument("supervised_step: empty batch");

    Tape tape;
    const net::BoundParams g(tape, gen.params, true);
    const net::BoundParams d(tape, disc.params, false);
    const Var hazy = tape.constant(batch.hazy);
    const Var clear = tape.constant(batch.clear);

    StepResult r;
    r.params_used = &gen;
    const Var out = net::generator_forward(gen.config, g, hazy, &r.forward);

    const loss::LossWeights& w = config.weights;
    const Var msl = loss::msl(out, clear, config.norm_mode);
    const Var pl = loss::perceptual(out, clear, fx, config.norm_mode);
    const auto adv = loss::adversarial(disc.config, d, clear, out, config.generator_objective);
    Var total = ad::add(msl, weighted(pl, w.alpha));
    total = ad::add(total, weighted(adv.g_loss, w.delta));

    r.report.msl = msl.value().item();
    r.report.pl = pl.value().item();
    r.report.adv_g = adv.g_loss.value().item();
    r.report.adv_d = adv.d_loss.value().item();
    if (config.enable_contrastive) {
        const Var cont = ad::add(loss::l1_reconstruction(clear, out),
                                 weighted(loss::contrastive(hazy, clear, out, fx), config.contrastive_balance));
        total = ad::add(total, weighted(cont, w.epsilon));
        r.report.cont = cont.value().item();
        r.contrastive_terms = 1;
    }
    r.report = loss::loss_total(r.report, w);

    tape.backward(total);
    r.gradients = g.gradients();
    r.output = out.value();
    return r;
}

StepResult unsupervised_step(const net::GeneratorParams& gen, const Tensor4& hazy_batch, const TrainConfig& config) {
    if (hazy_batch.empty()) throw std::invalid_argument("unsupervised_step: empty batch");
    Tape tape;
    const net::BoundParams g(tape, gen.params, true);
    const Var hazy = tape.constant(hazy_batch);

    StepResult r;
    r.params_used = &gen;
    const Var out = net::generator_forward(gen.config, g, hazy, &r.forward);
    const Var tv = loss::total_variation(out);
    const Var dc = loss::dark_channel(out);
    const Var total = ad::add(weighted(tv, config.weights.tv_weight), weighted(dc, config.weights.gamma));

    r.report.tv = tv.value().item();
    r.report.dc = dc.value().item();
    r.report = loss::loss_total(r.report, config.weights);

    tape.backward(total);
    r.gradients = g.gradients();
    r.output = out.value();
    return r;
}

DiscriminatorStepResult discriminator_step(const net::DiscriminatorParams& disc, const Tensor4& real,
                                           const Tensor4& fake) {
    Tape tape;
    const net::BoundParams d(tape, disc.params, true);
    // Both images enter as constants: no gradient can reach the generator.
    const auto adv = loss::adversarial(disc.config, d, tape.constant(real), tape.constant(fake));
    tape.backward(adv.d_loss);
    return {adv.d_loss.value().item(), d.gradients()};
}

Tensor4 crop(const Tensor4& image, std::size_t y, std::size_t x, std::size_t size) {
    const Shape s = image.shape();
    if (s.n != 1 || y + size > s.h || x + size > s.w) {
        throw std::invalid_argument("crop: " + std::to_string(size) + "px at (" + std::to_string(y) + "," +
                                    std::to_string(x) + ") does not fit " + s.str());
    }
    Tensor4 out({1, s.c, size, size});
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t r = 0; r < size; ++r)
            std::copy_n(image.plane(0, c) + (y + r) * s.w + x, size, out.plane(0, c) + r * size);
    return out;
}

Tensor4 center_crop(const Tensor4& image, std::size_t size) {
    const Shape s = image.shape();
    if (size > s.h || size > s.w) throw std::invalid_argument("center_crop: " + s.str() + " smaller than crop");
    return crop(image, (s.h - size) / 2, (s.w - size) / 2, size);
}

Tensor4 dehaze(const net::GeneratorParams& gen, const Tensor4& hazy_unit, net::ForwardStats* stats) {
    const Shape s = hazy_unit.shape();
    const std::size_t m = gen.config.size_multiple();
    const std::size_t ph = (s.h + m - 1) / m * m;
    const std::size_t pw = (s.w + m - 1) / m * m;
    const Tensor4 padded = (ph == s.h && pw == s.w) ? hazy_unit : pad_replicate(hazy_unit, ph, pw);
    Tensor4 out = to_unit(net::generator_infer(gen, to_signed(padded), stats));
    return (ph == s.h && pw == s.w) ? out : unpad(out, s.h, s.w);
}

net::GeneratorParams initial_generator(const TrainConfig& config) {
    return net::build_generator(config.generator, config.seed);
}

net::DiscriminatorParams initial_discriminator(const TrainConfig& config) {
    return net::build_discriminator(config.discriminator, config.seed ^ kDiscriminatorStream);
}

TrainResult train(const TrainConfig& config, std::span<const LabeledPair> labeled,
                  std::span<const UnlabeledImage> unlabeled, const TrainOutputs& outputs,
                  const std::function<void(const LogRow&)>& on_step) {
    config.validate();
    if (labeled.empty()) throw std::invalid_argument("train: labeled set is empty");
    if (unlabeled.empty()) throw std::invalid_argument("train: unlabeled set is empty");
    for (const auto& p : labeled) {
        check_image(p.hazy, config.crop, p.id);
        check_image(p.clear, config.crop, p.id);
        require_same_shape(p.hazy, p.clear, "train: labeled pair");
    }
    for (const auto& u : unlabeled) check_image(u.hazy, config.crop, u.id);

    TrainResult result{initial_generator(config), initial_discriminator(config),
                       {},
                       {}};
    net::GeneratorParams& gen = result.generator;
    net::DiscriminatorParams& disc = result.discriminator;
    const loss::FeatureExtractor fx;
    OptimizerState gen_state = OptimizerState::for_params(gen.params);
    OptimizerState disc_state = OptimizerState::for_params(disc.params);

    std::mt19937_64 rng(config.seed ^ kDataStream);
    Cycler unlabeled_order(unlabeled.size(), rng);
    const std::size_t steps_per_epoch = (labeled.size() + config.batch_labeled - 1) / config.batch_labeled;

    std::ofstream log_file;
    if (!outputs.log_csv.empty()) {
        log_file.open(outputs.log_csv);
        if (!log_file) throw std::runtime_error("cannot write log " + outputs.log_csv.string());
        log_file << loss::csv_header() << '\n';
    }

    std::vector<std::size_t> order(labeled.size());
    std::size_t step = 0;
    bool done = false;
    for (std::size_t epoch = 1; epoch <= config.epochs && !done; ++epoch) {
        const double lr = lr_at_epoch(epoch, config);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);

        for (std::size_t b = 0; b < steps_per_epoch; ++b) {
            if (config.max_steps != 0 && step >= config.max_steps) {
                done = true;
                break;
            }
            std::vector<Tensor4> hazy, clear, unl;
            for (std::size_t k = 0; k < config.batch_labeled; ++k) {
                // The last batch of an epoch wraps to the front of the order.
                const LabeledPair& p = labeled[order[(b * config.batch_labeled + k) % order.size()]];
                const Shape s = p.hazy.shape();
                std::uniform_int_distribution<std::size_t> dy(0, s.h - config.crop), dx(0, s.w - config.crop);
                const std::size_t y = dy(rng);
                const std::size_t x = dx(rng);
                hazy.push_back(to_signed(crop(p.hazy, y, x, config.crop)));
                clear.push_back(to_signed(crop(p.clear, y, x, config.crop)));
            }
            for (std::size_t k = 0; k < config.batch_unlabeled; ++k) {
                unl.push_back(to_signed(random_crop(unlabeled[unlabeled_order.next()].hazy, config.crop, rng)));
            }
            const LabeledBatch batch{stack(hazy), stack(clear)};

            const StepResult sup = supervised_step(gen, disc, fx, batch, config);
            const StepResult uns = unsupervised_step(gen, stack(unl), config);
            adam_step(gen.params, add_grads(sup.gradients, uns.gradients), gen_state, lr, config.adam);
            ++step;
            result.stats.generator_updates += 1;
            result.stats.contrastive_terms += sup.contrastive_terms;
            result.stats.dwt_calls += sup.forward.dwt_calls + uns.forward.dwt_calls;

            if (step % config.d_update_period == 0) {
                const auto d = discriminator_step(disc, batch.clear, sup.output);
                adam_step(disc.params, d.gradients, disc_state, lr, config.adam);
                result.stats.discriminator_updates += 1;
            }

            LogRow row{step, epoch, lr, sup.report, sup.report.total};
            row.report += uns.report;
            row.report.adv_d = sup.report.adv_d;
            result.log.push_back(row);
            if (log_file) log_file << loss::csv_row(step, epoch, lr, row.report) << '\n' << std::flush;
            if (on_step) on_step(row);
            if (!outputs.checkpoint.empty() && config.checkpoint_every != 0 && step % config.checkpoint_every == 0) {
                net::save_checkpoint(outputs.checkpoint, gen);
            }
        }
    }
    result.stats.steps = step;
    if (!outputs.checkpoint.empty()) net::save_checkpoint(outputs.checkpoint, gen);
    return result;
}

}  // namespace hazelab::train
