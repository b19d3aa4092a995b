#include "hazelab/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hazelab::net {
namespace {

std::string block_name(const std::string& stage, std::size_t block, std::size_t conv) {
    return stage + ".block" + std::to_string(block) + ".conv" + std::to_string(conv);
}

class Initializer {
public:
    explicit Initializer(std::uint64_t seed) : rng_(seed) {}

    // (out, in, kh, kw) kernel U(-b, b) with b = 1/sqrt(in*kh*kw), zero (1, out, 1, 1) bias.
    // Random biases left whole ReLU stages dead at init in narrow configs.
    void conv(ParamSet& set, const std::string& name, std::size_t out, std::size_t in, std::size_t k,
              bool bias = true) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
        std::uniform_real_distribution<double> u(-bound, bound);
        Tensor4 w({out, in, k, k});
        for (auto& v : w.data()) v = u(rng_);
        set.add(name + ".w", std::move(w));
        if (bias) set.add(name + ".b", Tensor4({1, out, 1, 1}));
    }

    // Transposed conv kernel in conv2d layout (in, out, k, k); bias on `out`.
    void transposed(ParamSet& set, const std::string& name, std::size_t in, std::size_t out, std::size_t k) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
        std::uniform_real_distribution<double> u(-bound, bound);
        Tensor4 w({in, out, k, k});
        for (auto& v : w.data()) v = u(rng_);
        set.add(name + ".w", std::move(w));
        set.add(name + ".b", Tensor4({1, out, 1, 1}));
    }

    void residual_blocks(ParamSet& set, const std::string& stage, std::size_t blocks, std::size_t channels) {
        for (std::size_t b = 0; b < blocks; ++b) {
            conv(set, block_name(stage, b, 1), channels, channels, 3);
            conv(set, block_name(stage, b, 2), channels, channels, 3);
        }
    }

private:
    std::mt19937_64 rng_;
};

Var conv_bias(const BoundParams& p, const std::string& name, const Var& x, std::size_t stride, std::size_t pad) {
    return ad::add_channel_bias(ad::conv2d(x, p(name + ".w"), stride, pad), p(name + ".b"));
}

Var residual_block(const BoundParams& p, const std::string& stage, std::size_t block, const Var& x) {
    Var h = ad::relu(conv_bias(p, block_name(stage, block, 1), x, 1, 1));
    h = conv_bias(p, block_name(stage, block, 2), h, 1, 1);
    return ad::add(x, h);
}

Var residual_stack(const BoundParams& p, const std::string& stage, std::size_t blocks, Var x) {
    for (std::size_t b = 0; b < blocks; ++b) x = residual_block(p, stage, b, x);
    return x;
}

}  // namespace

void ParamSet::add(std::string name, Tensor4 value) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value)});
}

bool ParamSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamSet::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
    return it->second;
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> out;
    out.reserve(scalar_count());
    for (const auto& e : entries_) out.insert(out.end(), e.value.data().begin(), e.value.data().end());
    return out;
}

bool ParamSet::operator==(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.value.shape() != b.value.shape() || a.value.vec() != b.value.vec()) return false;
    }
    return true;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool requires_grad) : params_(&params) {
    vars_.reserve(params.size());
    for (const auto& e : params) vars_.push_back(tape.leaf(e.value, requires_grad));
}

std::vector<Tensor4> BoundParams::gradients() const {
    std::vector<Tensor4> out;
    out.reserve(vars_.size());
    for (const auto& v : vars_) out.push_back(v.grad());
    return out;
}

void GeneratorConfig::validate() const {
    if (base_channels == 0) throw std::invalid_argument("generator: base_channels must be >= 1");
    if (scales == 0 || scales > 6) throw std::invalid_argument("generator: scales must be in 1..6");
    if (image_channels == 0) throw std::invalid_argument("generator: image_channels must be >= 1");
}

std::size_t generator_parameter_count(const GeneratorConfig& cfg) {
    cfg.validate();
    auto conv = [](std::size_t out, std::size_t in, std::size_t k) { return out * in * k * k + out; };
    auto blocks = [&](std::size_t count, std::size_t ch) { return count * 2 * conv(ch, ch, 3); };
    const std::size_t img = cfg.image_channels;
    std::size_t total = conv(cfg.base_channels, img, 3) + conv(img, cfg.base_channels, 3);
    for (std::size_t s = 1; s <= cfg.scales; ++s) {
        total += 2 * blocks(cfg.blocks_per_scale, cfg.channels_at(s));
        if (s < cfg.scales) {
            total += conv(cfg.channels_at(s + 1), cfg.channels_at(s), 3);  // stride-2 down
            total += conv(cfg.channels_at(s), cfg.channels_at(s + 1), 2);  // transposed up, bias on c_s
        }
    }
    const std::size_t inner = cfg.channels_at(cfg.scales);
    if (cfg.enable_dwt_bottleneck) {
        total += blocks(cfg.bottleneck_blocks, 4 * inner) + conv(4 * inner, 4 * inner, 1);
    } else {
        total += blocks(cfg.bottleneck_blocks, inner);
    }
    return total;
}

GeneratorParams build_generator(const GeneratorConfig& config, std::uint64_t seed) {
    config.validate();
    GeneratorParams gen{config, {}};
    ParamSet& set = gen.params;
    Initializer init(seed);
    const std::size_t S = config.scales;

    init.conv(set, "head", config.base_channels, config.image_channels, 3);
    for (std::size_t s = 1; s <= S; ++s) {
        init.residual_blocks(set, "enc" + std::to_string(s), config.blocks_per_scale, config.channels_at(s));
        if (s < S) init.conv(set, "down" + std::to_string(s), config.channels_at(s + 1), config.channels_at(s), 3);
    }

    const std::size_t inner = config.channels_at(S);
    if (config.enable_dwt_bottleneck) {
        init.residual_blocks(set, "bottleneck", config.bottleneck_blocks, 4 * inner);
        Tensor4 fuse({4 * inner, 4 * inner, 1, 1});
        for (std::size_t c = 0; c < 4 * inner; ++c) fuse.at(c, c, 0, 0) = 1.0;
        set.add("bottleneck.fuse.w", std::move(fuse));
        set.add("bottleneck.fuse.b", Tensor4({1, 4 * inner, 1, 1}));
    } else {
        init.residual_blocks(set, "bottleneck", config.bottleneck_blocks, inner);
    }

    for (std::size_t s = S; s >= 1; --s) {
        init.residual_blocks(set, "dec" + std::to_string(s), config.blocks_per_scale, config.channels_at(s));
        if (s > 1) {
            init.transposed(set, "up" + std::to_string(s), config.channels_at(s), config.channels_at(s - 1), 2);
        }
    }

    init.conv(set, "tail", config.image_channels, config.base_channels, 3);
    if (config.zero_init_final) {
        set.get("tail.w").fill(0.0);
        set.get("tail.b").fill(0.0);
    }
    return gen;
}

Var bottleneck_forward(const GeneratorConfig& config, const BoundParams& p, const Var& features, ForwardStats* stats) {
    if (!config.enable_dwt_bottleneck) return residual_stack(p, "bottleneck", config.bottleneck_blocks, features);

    const wavelet::BandVars bands = wavelet::dwt2(features, config.haar_mode);
    if (stats) ++stats->dwt_calls;
    const std::size_t c = features.shape().c;
    const std::array<Var, 4> parts{bands.ll, bands.lh, bands.hl, bands.hh};
    Var packed = ad::concat_channels(parts);
    packed = residual_stack(p, "bottleneck", config.bottleneck_blocks, packed);
    packed = conv_bias(p, "bottleneck.fuse", packed, 1, 0);
    const wavelet::BandVars out{ad::slice_channels(packed, 0, c), ad::slice_channels(packed, c, c),
                                ad::slice_channels(packed, 2 * c, c), ad::slice_channels(packed, 3 * c, c)};
    if (stats) ++stats->iwt_calls;
    return wavelet::iwt2(out, config.haar_mode);
}

Var generator_forward(const GeneratorConfig& config, const BoundParams& p, const Var& hazy, ForwardStats* stats) {
    const Shape s = hazy.shape();
    if (s.c != config.image_channels) {
        throw std::invalid_argument("generator: expected " + std::to_string(config.image_channels) +
                                    " channels, got " + s.str());
    }
    const std::size_t m = config.size_multiple();
    if (s.h % m != 0 || s.w % m != 0 || s.h == 0 || s.w == 0) {
        throw std::invalid_argument("generator: input " + s.str() + " spatial dims must be multiples of " +
                                    std::to_string(m));
    }
    const std::size_t S = config.scales;

    Var f = ad::relu(conv_bias(p, "head", hazy, 1, 1));
    std::vector<Var> skips(S + 1);
    for (std::size_t sc = 1; sc <= S; ++sc) {
        f = residual_stack(p, "enc" + std::to_string(sc), config.blocks_per_scale, f);
        skips[sc] = f;
        if (sc < S) f = ad::relu(conv_bias(p, "down" + std::to_string(sc), f, 2, 1));
    }

    f = bottleneck_forward(config, p, f, stats);

    for (std::size_t sc = S; sc >= 1; --sc) {
        f = residual_stack(p, "dec" + std::to_string(sc), config.blocks_per_scale, f);
        if (sc > 1) {
            const std::string up = "up" + std::to_string(sc);
            f = ad::relu(ad::add_channel_bias(ad::conv_transpose2d(f, p(up + ".w"), 2), p(up + ".b")));
            f = ad::add(f, skips[sc - 1]);
        }
    }

    const Var residual = conv_bias(p, "tail", f, 1, 1);
    return ad::add(hazy, residual);
}

Tensor4 generator_infer(const GeneratorParams& gen, const Tensor4& hazy, ForwardStats* stats) {
    Tape tape;
    const BoundParams p(tape, gen.params, false);
    const Var x = tape.constant(hazy);
    Tensor4 out = generator_forward(gen.config, p, x, stats).value();
    for (auto& v : out.data()) v = std::clamp(v, -1.0, 1.0);
    return out;
}

void DiscriminatorConfig::validate() const {
    if (base_channels == 0 || blocks == 0) throw std::invalid_argument("discriminator: empty architecture");
    const std::size_t m = std::size_t{1} << blocks;
    if (input_size % m != 0 || input_size / m < 2) {
        throw std::invalid_argument("discriminator: input_size " + std::to_string(input_size) +
                                    " must be a multiple of " + std::to_string(m) + " and leave >= 2x2 features");
    }
}

DiscriminatorParams build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed) {
    config.validate();
    DiscriminatorParams disc{config, {}};
    Initializer init(seed);
    std::size_t in = config.image_channels;
    for (std::size_t b = 0; b < config.blocks; ++b) {
        const std::size_t out = config.base_channels << b;
        init.conv(disc.params, "block" + std::to_string(b), out, in, 4, false);
        in = out;
    }
    init.conv(disc.params, "head", 1, in, 1);
    return disc;
}

Var discriminator_forward(const DiscriminatorConfig& config, const BoundParams& p, const Var& image) {
    const Shape s = image.shape();
    if (s.c != config.image_channels || s.h != config.input_size || s.w != config.input_size) {
        throw std::invalid_argument("discriminator: expected (n," + std::to_string(config.image_channels) + "," +
                                    std::to_string(config.input_size) + "," + std::to_string(config.input_size) +
                                    ") input, got " + s.str());
    }
    Var f = image;
    for (std::size_t b = 0; b < config.blocks; ++b) {
        f = ad::conv2d(f, p("block" + std::to_string(b) + ".w"), 2, 1);
        f = ad::relu(ad::instance_norm(f, config.norm_eps));
    }
    f = ad::global_avg_pool(f);
    f = ad::add_channel_bias(ad::conv2d(f, p("head.w"), 1, 0), p("head.b"));
    return ad::sigmoid(f);
}

Tensor4 discriminator_infer(const DiscriminatorParams& disc, const Tensor4& image) {
    Tape tape;
    const BoundParams p(tape, disc.params, false);
    return discriminator_forward(disc.config, p, tape.constant(image)).value();
}

}  // namespace hazelab::net
