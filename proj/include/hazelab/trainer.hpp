#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hazelab/losses.hpp"
#include "hazelab/network.hpp"

namespace hazelab::train {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

struct TrainConfig {
    std::size_t epochs = 10;
    double lr_start = 1e-4;
    double lr_end = 1e-6;
    std::size_t decay_start_epoch = 5;
    std::size_t crop = 32;
    std::size_t batch_labeled = 2;
    std::size_t batch_unlabeled = 2;
    std::size_t d_update_period = 5;
    AdamConfig adam;
    loss::LossWeights weights;
    // Balances the pixel L1 term against the feature contrast inside the
    // contrastive objective: cont = l1 + contrastive_balance * contrast.
    double contrastive_balance = 1.0;
    bool enable_contrastive = true;
    loss::GeneratorObjective generator_objective = loss::GeneratorObjective::kNonSaturating;
    loss::NormMode norm_mode = loss::NormMode::kUnsquared;
    net::GeneratorConfig generator;
    net::DiscriminatorConfig discriminator;
    std::uint64_t seed = 0;
    // 0 = run every epoch to the end.
    std::size_t max_steps = 0;
    // 0 = checkpoint only at exit.
    std::size_t checkpoint_every = 0;

    // 300 epochs, decay after 150, 256 crops.
    static TrainConfig paper();
    // 10 epochs, decay after 5, 32 crops, lr 1e-3 down to 1e-5.
    static TrainConfig toy();

    void validate() const;
};

// Constant lr_start through decay_start_epoch, then linear down to lr_end at
// the final epoch. Epochs are 1-based; throws outside [1, epochs].
double lr_at_epoch(std::size_t epoch, const TrainConfig& config);

struct OptimizerState {
    std::vector<Tensor4> m;
    std::vector<Tensor4> v;
    std::uint64_t step = 0;

    static OptimizerState for_params(const net::ParamSet& params);
};

// Adam with coupled L2 decay (g += wd * theta) and bias correction.
// Throws std::invalid_argument naming a parameter with a non-finite gradient.
void adam_step(net::ParamSet& params, std::span<const Tensor4> grads, OptimizerState& state, double lr,
               const AdamConfig& config);

// Images in [-1,1], shape (n,3,crop,crop).
struct LabeledBatch {
    Tensor4 hazy;
    Tensor4 clear;
};

struct StepResult {
    loss::LossReport report;
    std::vector<Tensor4> gradients;  // generator parameter order
    Tensor4 output;                  // generator output (detached)
    const net::GeneratorParams* params_used = nullptr;
    net::ForwardStats forward;
    std::size_t contrastive_terms = 0;
};

// Supervised branch: msl, perceptual, generator adversarial and (when enabled)
// the contrastive objective. Gradients reach generator parameters only.
StepResult supervised_step(const net::GeneratorParams& gen, const net::DiscriminatorParams& disc,
                           const loss::FeatureExtractor& fx, const LabeledBatch& batch, const TrainConfig& config);

// Unsupervised branch: tv_weight * tv + gamma * dc on unlabeled hazy images.
StepResult unsupervised_step(const net::GeneratorParams& gen, const Tensor4& hazy, const TrainConfig& config);

struct DiscriminatorStepResult {
    double d_loss = 0.0;
    std::vector<Tensor4> gradients;  // discriminator parameter order
};

DiscriminatorStepResult discriminator_step(const net::DiscriminatorParams& disc, const Tensor4& real,
                                           const Tensor4& fake);

// Images in [0,1], each (1,3,h,w) with h, w >= crop.
struct LabeledPair {
    std::string id;
    Tensor4 hazy;
    Tensor4 clear;
};

struct UnlabeledImage {
    std::string id;
    Tensor4 hazy;
};

struct LogRow {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    loss::LossReport report;
    double supervised_total = 0.0;
};

struct TrainStats {
    std::size_t steps = 0;
    std::size_t generator_updates = 0;
    std::size_t discriminator_updates = 0;
    std::size_t contrastive_terms = 0;
    std::size_t dwt_calls = 0;
};

struct TrainResult {
    net::GeneratorParams generator;
    net::DiscriminatorParams discriminator;
    TrainStats stats;
    std::vector<LogRow> log;
};

struct TrainOutputs {
    std::filesystem::path checkpoint;  // empty = no file
    std::filesystem::path log_csv;     // empty = no file
};

// The networks train() starts from.
net::GeneratorParams initial_generator(const TrainConfig& config);
net::DiscriminatorParams initial_discriminator(const TrainConfig& config);

// The semi-supervised loop: each step sums the supervised and unsupervised
// generator gradients into one Adam update; every d_update_period-th step
// also updates the discriminator on (labeled clear, detached generator output).
TrainResult train(const TrainConfig& config, std::span<const LabeledPair> labeled,
                  std::span<const UnlabeledImage> unlabeled, const TrainOutputs& outputs = {},
                  const std::function<void(const LogRow&)>& on_step = {});

// Top-left-anchored crop of a (1,c,h,w) image.
Tensor4 crop(const Tensor4& image, std::size_t y, std::size_t x, std::size_t size);
Tensor4 center_crop(const Tensor4& image, std::size_t size);

// Runs the generator on a [0,1] image of any size (edge-padded to the
// generator's size multiple) and returns the [0,1] result.
Tensor4 dehaze(const net::GeneratorParams& gen, const Tensor4& hazy_unit, net::ForwardStats* stats = nullptr);

}  // namespace hazelab::train
