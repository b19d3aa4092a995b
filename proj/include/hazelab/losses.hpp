#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazelab/autodiff.hpp"
#include "hazelab/network.hpp"

namespace hazelab::loss {

// Weights of the total objective:
//   total = msl + alpha*pl + tv_weight*tv + gamma*dc + delta*adv + epsilon*cont
struct LossWeights {
    double alpha = 1e-2;
    double tv_weight = 1e-5;
    double gamma = 1e-5;
    double delta = 1e-3;
    double epsilon = 1e-1;

    void validate() const;
};

// Fixed, seeded conv+ReLU stack standing in for a pretrained backbone.
// Three stride-2 stages (widths 8/16/32 by default) with equal stage weights.
class FeatureExtractor {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x5eedfea7;

    explicit FeatureExtractor(std::uint64_t seed = kDefaultSeed, std::vector<std::size_t> widths = {8, 16, 32},
                              std::size_t image_channels = 3);

    // Stage outputs for `image`, recorded on its tape with frozen weights.
    std::vector<Var> stages(const Var& image) const;

    std::size_t stage_count() const { return widths_.size(); }
    const std::vector<double>& stage_weights() const { return stage_weights_; }
    // Stage used by the perceptual loss (the last one).
    std::size_t perceptual_stage() const { return widths_.size() - 1; }
    const net::ParamSet& params() const { return params_; }

private:
    std::vector<std::size_t> widths_;
    std::vector<double> stage_weights_;
    net::ParamSet params_;
};

// kUnsquared is the plain L2 norm; kSquared its square.
enum class NormMode { kUnsquared, kSquared };
// kNonSaturating: -mean log D(fake). kMinimax: mean log(1 - D(fake)).
enum class GeneratorObjective { kNonSaturating, kMinimax };

inline constexpr double kLogClamp = 1e-7;

// Batch mean of the per-image L2 norm of (pred - target).
Var msl(const Var& pred, const Var& target, NormMode mode = NormMode::kUnsquared);
// Batch mean of the L2 distance between the extractor's last-stage features.
Var perceptual(const Var& pred, const Var& target, const FeatureExtractor& fx,
               NormMode mode = NormMode::kUnsquared);

struct AdversarialLosses {
    Var d_loss;  // -[mean log D(real) + mean log(1 - D(fake))]
    Var g_loss;
};
// D outputs are clamped to [1e-7, 1 - 1e-7] before the logs.
AdversarialLosses adversarial(const net::DiscriminatorConfig& config, const net::BoundParams& disc, const Var& real,
                              const Var& fake, GeneratorObjective objective = GeneratorObjective::kNonSaturating);

// Batch mean of |horizontal forward differences|_1 + |vertical|_1.
Var total_variation(const Var& pred);

// pred in [-1,1] is mapped to [0,1]; returns the batch mean of the L1 norm
// (sum over h*w) of its 3x3 dark channel.
Var dark_channel(const Var& pred, std::size_t patch = 3);

// sum_i w_i * [ D(G_i(clear), G_i(restored)) - D(G_i(hazy), G_i(restored)) ]
// with D the mean absolute difference.
Var contrastive(const Var& hazy, const Var& clear, const Var& restored, const FeatureExtractor& fx);

// Mean absolute difference, the pixel term paired with the contrastive one.
Var l1_reconstruction(const Var& clear, const Var& restored);

struct LossReport {
    double msl = 0.0;
    double pl = 0.0;
    double adv_g = 0.0;
    double adv_d = 0.0;
    double tv = 0.0;
    double dc = 0.0;
    double cont = 0.0;
    double total = 0.0;

    // Weighted sum of the generator terms (adv_d is reported only).
    double weighted_total(const LossWeights& w) const;
    LossReport& operator+=(const LossReport& other);
};

// Fills `total`. Throws std::invalid_argument naming the first non-finite term.
LossReport loss_total(LossReport components, const LossWeights& weights);

std::string csv_header();
std::string csv_row(std::size_t step, std::size_t epoch, double lr, const LossReport& report);

}  // namespace hazelab::loss
