#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hazelab/autodiff.hpp"
#include "hazelab/wavelet.hpp"

namespace hazelab::net {

struct NamedTensor {
    std::string name;
    Tensor4 value;
};

// Ordered, named parameter arrays. Order is the construction order and is
// what the optimizer and checkpoints enumerate.
class ParamSet {
public:
    void add(std::string name, Tensor4 value);

    std::size_t size() const { return entries_.size(); }
    NamedTensor& operator[](std::size_t i) { return entries_[i]; }
    const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool contains(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    const Tensor4& get(std::string_view name) const { return entries_[index_of(name)].value; }
    Tensor4& get(std::string_view name) { return entries_[index_of(name)].value; }

    std::size_t scalar_count() const;
    std::vector<double> flatten() const;

    bool operator==(const ParamSet& other) const;

private:
    std::vector<NamedTensor> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// A ParamSet registered on a tape, one Var per entry in the same order.
class BoundParams {
public:
    BoundParams(Tape& tape, const ParamSet& params, bool requires_grad);

    const Var& operator()(std::string_view name) const { return vars_[params_->index_of(name)]; }
    const Var& operator[](std::size_t i) const { return vars_[i]; }
    std::size_t size() const { return vars_.size(); }
    const ParamSet& params() const { return *params_; }

    // Gradients of every entry after Tape::backward, in ParamSet order.
    std::vector<Tensor4> gradients() const;

private:
    const ParamSet* params_;
    std::vector<Var> vars_;
};

struct GeneratorConfig {
    std::size_t base_channels = 16;
    std::size_t scales = 3;
    std::size_t blocks_per_scale = 3;
    std::size_t bottleneck_blocks = 1;
    std::size_t image_channels = 3;
    // Off gives the plain-residual "Baseline*" innermost stage.
    bool enable_dwt_bottleneck = true;
    wavelet::HaarMode haar_mode = wavelet::HaarMode::kPaper;
    // Start from the identity mapping (output = input).
    bool zero_init_final = true;

    void validate() const;
    // Input height/width must be a multiple of this.
    std::size_t size_multiple() const { return std::size_t{1} << scales; }
    std::size_t channels_at(std::size_t scale) const { return base_channels << (scale - 1); }
    bool operator==(const GeneratorConfig&) const = default;
};

// Closed form of the layer table in docs/architecture.md.
std::size_t generator_parameter_count(const GeneratorConfig& config);

struct GeneratorParams {
    GeneratorConfig config;
    ParamSet params;
};

// Fan-in scaled uniform kernels, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), from a
// seeded mt19937_64; biases start at zero. The bottleneck fuse conv starts as the identity.
GeneratorParams build_generator(const GeneratorConfig& config, std::uint64_t seed);

struct ForwardStats {
    std::size_t dwt_calls = 0;
    std::size_t iwt_calls = 0;
};

// Training-mode forward, hazy in [-1,1], output = hazy + residual (unclamped).
Var generator_forward(const GeneratorConfig& config, const BoundParams& params, const Var& hazy,
                      ForwardStats* stats = nullptr);
// Inference: no gradients, output clamped to [-1,1].
Tensor4 generator_infer(const GeneratorParams& gen, const Tensor4& hazy, ForwardStats* stats = nullptr);
// The innermost stage on its own.
Var bottleneck_forward(const GeneratorConfig& config, const BoundParams& params, const Var& features,
                       ForwardStats* stats = nullptr);

struct DiscriminatorConfig {
    std::size_t base_channels = 8;
    std::size_t blocks = 4;
    std::size_t input_size = 32;
    std::size_t image_channels = 3;
    double norm_eps = 1e-5;

    void validate() const;
    bool operator==(const DiscriminatorConfig&) const = default;
};

struct DiscriminatorParams {
    DiscriminatorConfig config;
    ParamSet params;
};

DiscriminatorParams build_discriminator(const DiscriminatorConfig& config, std::uint64_t seed);

// Stride-2 conv -> instance norm -> ReLU blocks, global average, 1x1 head,
// sigmoid. Returns (n,1,1,1) probabilities in (0,1).
Var discriminator_forward(const DiscriminatorConfig& config, const BoundParams& params, const Var& image);
Tensor4 discriminator_infer(const DiscriminatorParams& disc, const Tensor4& image);

}  // namespace hazelab::net
