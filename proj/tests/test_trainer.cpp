#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hazelab/checkpoint.hpp"
#include "hazelab/haze.hpp"
#include "hazelab/trainer.hpp"
#include "test_support.hpp"

using namespace hazelab;
using namespace hazelab::testing;
namespace fs = std::filesystem;

namespace {

// Small enough that a full train() call takes well under a second per step.
train::TrainConfig small_config() {
    train::TrainConfig c = train::TrainConfig::toy();
    c.generator.base_channels = 4;
    c.generator.scales = 2;
    c.generator.blocks_per_scale = 1;
    c.discriminator.blocks = 2;
    c.discriminator.base_channels = 4;
    c.crop = 16;
    c.discriminator.input_size = 16;
    c.batch_labeled = 2;
    c.batch_unlabeled = 1;
    return c;
}

std::vector<train::LabeledPair> pairs(std::size_t count, std::size_t size, std::uint64_t seed) {
    std::vector<train::LabeledPair> out;
    for (std::size_t i = 0; i < count; ++i) {
        const Tensor4 clear = haze::procedural_clear_image(size, size, seed + i);
        const Tensor4 depth = haze::procedural_depth(haze::DepthKind::kRamp, size, size, 1.5);
        out.push_back({"p" + std::to_string(i), haze::synthesize_haze({clear, depth, 1.0, {0.9, 0.9, 0.9}}), clear});
    }
    return out;
}

std::vector<train::UnlabeledImage> unlabeled(std::size_t count, std::size_t size, std::uint64_t seed) {
    std::vector<train::UnlabeledImage> out;
    for (const auto& p : pairs(count, size, seed)) out.push_back({p.id, p.hazy});
    return out;
}

double supervised_total(const train::StepResult& r) { return r.report.total; }

}  // namespace

TEST(Schedule, FullScaleEndpointsAndMidpoint) {
    const auto c = train::TrainConfig::paper();
    EXPECT_EQ(train::lr_at_epoch(1, c), 1e-4);
    EXPECT_EQ(train::lr_at_epoch(150, c), 1e-4);
    EXPECT_EQ(train::lr_at_epoch(300, c), 1e-6);
    EXPECT_NEAR(train::lr_at_epoch(225, c), 5.05e-5, 1e-18);
    EXPECT_THROW(train::lr_at_epoch(0, c), std::invalid_argument);
    EXPECT_THROW(train::lr_at_epoch(301, c), std::invalid_argument);
}

TEST(Schedule, AffineAfterDecayStartAndContinuous) {
    const auto c = train::TrainConfig::paper();
    const double step = train::lr_at_epoch(151, c) - train::lr_at_epoch(150, c);
    for (std::size_t e = 151; e < 300; ++e)
        EXPECT_NEAR(train::lr_at_epoch(e + 1, c) - train::lr_at_epoch(e, c), step, 1e-18);
    EXPECT_NEAR(-step, (1e-4 - 1e-6) / 150.0, 1e-18);
}

TEST(Schedule, ToyScalesDecayStart) {
    const auto c = train::TrainConfig::toy();
    EXPECT_EQ(c.decay_start_epoch, c.epochs / 2);
    EXPECT_EQ(c.lr_start, 1e-3);
    EXPECT_EQ(c.lr_end, 1e-5);
    EXPECT_EQ(train::lr_at_epoch(c.decay_start_epoch, c), c.lr_start);
    EXPECT_EQ(train::lr_at_epoch(c.epochs, c), c.lr_end);
}

TEST(Config, Validation) {
    EXPECT_NO_THROW(train::TrainConfig::paper().validate());
    EXPECT_NO_THROW(train::TrainConfig::toy().validate());
    auto c = train::TrainConfig::toy();
    c.lr_end = c.lr_start;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = train::TrainConfig::toy();
    c.crop = 20;
    c.discriminator.input_size = 20;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = train::TrainConfig::toy();
    c.d_update_period = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Adam, FixedPointAndFirstStep) {
    net::ParamSet p;
    p.add("zero", Tensor4({1, 1, 1, 2}, 0.0));
    p.add("w", Tensor4({1, 1, 1, 2}, std::vector<double>{0.5, -0.25}));
    auto state = train::OptimizerState::for_params(p);
    const std::vector<Tensor4> g = {Tensor4({1, 1, 1, 2}, 0.0), Tensor4({1, 1, 1, 2}, std::vector<double>{3.0, -0.01})};
    train::AdamConfig cfg;
    cfg.weight_decay = 0.0;
    train::adam_step(p, g, state, 1e-3, cfg);
    EXPECT_EQ(p.get("zero")[0], 0.0);
    EXPECT_NEAR(p.get("w")[0], 0.5 - 1e-3, 1e-9);
    EXPECT_NEAR(p.get("w")[1], -0.25 + 1e-3, 1e-9);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, WeightDecayShrinks) {
    net::ParamSet p;
    p.add("w", Tensor4({1, 1, 1, 1}, 2.0));
    auto state = train::OptimizerState::for_params(p);
    const std::vector<Tensor4> g = {Tensor4({1, 1, 1, 1}, 0.0)};
    double prev = 2.0;
    for (int i = 0; i < 5; ++i) {
        train::adam_step(p, g, state, 1e-2, {});
        EXPECT_LT(p.get("w")[0], prev);
        prev = p.get("w")[0];
    }
}

TEST(Adam, NonFiniteGradientNamesParameter) {
    net::ParamSet p;
    p.add("enc1.block0.conv1.w", Tensor4({1, 1, 1, 1}, 1.0));
    auto state = train::OptimizerState::for_params(p);
    const std::vector<Tensor4> g = {Tensor4({1, 1, 1, 1}, std::nan(""))};
    try {
        train::adam_step(p, g, state, 1e-3, {});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("enc1.block0.conv1.w"), std::string::npos);
    }
    EXPECT_EQ(state.step, 0u);
}

TEST(SupervisedStep, IdentityFixtureReducesToAdversarialTerm) {
    const auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    const auto disc = net::build_discriminator(cfg.discriminator, 2);
    const loss::FeatureExtractor fx;
    std::mt19937_64 rng(3);
    const Tensor4 x = random_tensor({2, 3, 16, 16}, rng);
    const auto r = train::supervised_step(gen, disc, fx, {x, x}, cfg);
    EXPECT_EQ(r.report.msl, 0.0);
    EXPECT_EQ(r.report.pl, 0.0);
    EXPECT_EQ(r.report.cont, 0.0);
    EXPECT_EQ(r.report.total, cfg.weights.delta * r.report.adv_g);
    EXPECT_GT(r.report.adv_g, 0.0);
}

TEST(SupervisedStep, EveryParameterGroupGetsGradient) {
    auto cfg = small_config();
    cfg.generator.zero_init_final = false;
    const auto gen = net::build_generator(cfg.generator, 4);
    const auto disc = net::build_discriminator(cfg.discriminator, 5);
    const auto data = pairs(2, 16, 40);
    const train::LabeledBatch batch{to_signed(stack(std::vector<Tensor4>{data[0].hazy, data[1].hazy})),
                                    to_signed(stack(std::vector<Tensor4>{data[0].clear, data[1].clear}))};
    const auto r = train::supervised_step(gen, disc, loss::FeatureExtractor(), batch, cfg);
    ASSERT_EQ(r.gradients.size(), gen.params.size());
    for (std::size_t i = 0; i < r.gradients.size(); ++i) {
        double norm = 0.0;
        for (double g : r.gradients[i].data()) norm += g * g;
        EXPECT_GT(norm, 0.0) << gen.params[i].name;
    }
}

TEST(SupervisedStep, OverfitsSinglePair) {
    auto cfg = small_config();
    auto gen = net::build_generator(cfg.generator, 6);
    const auto disc = net::build_discriminator(cfg.discriminator, 7);
    const loss::FeatureExtractor fx;
    const auto data = pairs(1, 16, 50);
    const train::LabeledBatch batch{to_signed(data[0].hazy), to_signed(data[0].clear)};
    auto state = train::OptimizerState::for_params(gen.params);
    const double initial = supervised_total(train::supervised_step(gen, disc, fx, batch, cfg));
    for (int i = 0; i < 50; ++i) {
        const auto r = train::supervised_step(gen, disc, fx, batch, cfg);
        train::adam_step(gen.params, r.gradients, state, 1e-3, cfg.adam);
    }
    const double final_loss = supervised_total(train::supervised_step(gen, disc, fx, batch, cfg));
    EXPECT_LT(final_loss, 0.5 * initial);
}

TEST(SupervisedStep, ContrastiveSwitch) {
    auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    const auto disc = net::build_discriminator(cfg.discriminator, 2);
    const auto data = pairs(1, 16, 60);
    const train::LabeledBatch batch{to_signed(data[0].hazy), to_signed(data[0].clear)};
    EXPECT_EQ(train::supervised_step(gen, disc, loss::FeatureExtractor(), batch, cfg).contrastive_terms, 1u);
    cfg.enable_contrastive = false;
    const auto off = train::supervised_step(gen, disc, loss::FeatureExtractor(), batch, cfg);
    EXPECT_EQ(off.contrastive_terms, 0u);
    EXPECT_EQ(off.report.cont, 0.0);
}

TEST(UnsupervisedStep, ConstantImageClosedForms) {
    const auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    const auto r = train::unsupervised_step(gen, Tensor4({1, 3, 16, 16}, 0.4), cfg);
    EXPECT_EQ(r.report.tv, 0.0);
    EXPECT_NEAR(r.report.dc, 0.7 * 256.0, 1e-9);  // 0.4 maps to 0.7 in [0,1]
}

TEST(UnsupervisedStep, SharesParametersWithSupervised) {
    const auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    const auto disc = net::build_discriminator(cfg.discriminator, 2);
    std::mt19937_64 rng(8);
    const Tensor4 x = random_tensor({1, 3, 16, 16}, rng);
    const auto sup = train::supervised_step(gen, disc, loss::FeatureExtractor(), {x, x}, cfg);
    const auto uns = train::unsupervised_step(gen, x, cfg);
    EXPECT_EQ(sup.params_used, &gen);
    EXPECT_EQ(uns.params_used, sup.params_used);
    EXPECT_EQ(sup.output.vec(), uns.output.vec());
}

TEST(UnsupervisedStep, TvGradientSmoothsCheckerboard) {
    auto cfg = small_config();
    auto gen = net::build_generator(cfg.generator, 9);
    Tensor4 board({1, 3, 16, 16});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t x = 0; x < 16; ++x) board.at(0, c, y, x) = (x + y) % 2 ? 0.6 : -0.6;
    auto state = train::OptimizerState::for_params(gen.params);
    const double initial = train::unsupervised_step(gen, board, cfg).report.tv;
    for (int i = 0; i < 20; ++i) {
        const auto r = train::unsupervised_step(gen, board, cfg);
        train::adam_step(gen.params, r.gradients, state, 1e-3, cfg.adam);
    }
    EXPECT_LT(train::unsupervised_step(gen, board, cfg).report.tv, initial);
}

TEST(DiscriminatorStep, TouchesOnlyDiscriminator) {
    const auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    auto disc = net::build_discriminator(cfg.discriminator, 2);
    const auto gen_before = gen.params;
    const auto disc_before = disc.params;
    std::mt19937_64 rng(10);
    const auto r = train::discriminator_step(disc, random_tensor({2, 3, 16, 16}, rng), random_tensor({2, 3, 16, 16}, rng));
    ASSERT_EQ(r.gradients.size(), disc.params.size());
    auto state = train::OptimizerState::for_params(disc.params);
    train::adam_step(disc.params, r.gradients, state, 1e-3, cfg.adam);
    EXPECT_TRUE(gen.params == gen_before);
    EXPECT_FALSE(disc.params == disc_before);
}

TEST(Train, CadenceCountsDiscriminatorUpdates) {
    auto cfg = small_config();
    cfg.epochs = 30;
    cfg.decay_start_epoch = 15;
    cfg.max_steps = 25;
    const auto r = train::train(cfg, pairs(2, 16, 70), unlabeled(1, 16, 80));
    EXPECT_EQ(r.stats.steps, 25u);
    EXPECT_EQ(r.stats.generator_updates, 25u);
    EXPECT_EQ(r.stats.discriminator_updates, 5u);
    EXPECT_EQ(r.log.size(), 25u);
    EXPECT_EQ(r.log.back().epoch, 25u);
}

TEST(Train, DeterministicAndWritesArtifacts) {
    auto cfg = small_config();
    cfg.epochs = 2;
    cfg.decay_start_epoch = 1;
    cfg.checkpoint_every = 2;
    const auto dir = fs::temp_directory_path() / "hazelab_train_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto lab = pairs(4, 20, 90);
    const auto unl = unlabeled(3, 24, 95);
    const auto a = train::train(cfg, lab, unl, {dir / "a.hzck", dir / "a.csv"});
    const auto b = train::train(cfg, lab, unl, {dir / "b.hzck", dir / "b.csv"});
    EXPECT_TRUE(a.generator.params == b.generator.params);
    EXPECT_TRUE(a.discriminator.params == b.discriminator.params);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(dir / "a.hzck"), slurp(dir / "b.hzck"));
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_EQ(slurp(dir / "a.csv").substr(0, loss::csv_header().size()), loss::csv_header());
    EXPECT_TRUE(net::load_checkpoint(dir / "a.hzck").params == a.generator.params);
    // 4 pairs / batch 2 = 2 steps per epoch, 2 epochs.
    EXPECT_EQ(a.stats.steps, 4u);
    EXPECT_EQ(a.log[2].lr, cfg.lr_end);

    auto other = cfg;
    other.seed = 1;
    EXPECT_FALSE(train::train(other, lab, unl).generator.params == a.generator.params);
}

TEST(Train, RejectsBadInputs) {
    const auto cfg = small_config();
    EXPECT_THROW(train::train(cfg, {}, unlabeled(1, 16, 1)), std::invalid_argument);
    EXPECT_THROW(train::train(cfg, pairs(1, 16, 1), {}), std::invalid_argument);
    EXPECT_THROW(train::train(cfg, pairs(1, 8, 1), unlabeled(1, 16, 1)), std::invalid_argument);
}

TEST(Crop, CentreAndBounds) {
    Tensor4 img({1, 1, 4, 6});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i);
    const Tensor4 c = train::center_crop(img, 2);
    EXPECT_EQ(c.vec(), (std::vector<double>{8, 9, 14, 15}));
    EXPECT_THROW(train::crop(img, 3, 0, 2), std::invalid_argument);
    EXPECT_THROW(train::center_crop(img, 5), std::invalid_argument);
}

TEST(Dehaze, AnySizeAndIdentityAtInit) {
    const auto cfg = small_config();
    const auto gen = net::build_generator(cfg.generator, 1);
    std::mt19937_64 rng(11);
    const Tensor4 img = random_tensor({1, 3, 13, 10}, rng, 0.0, 1.0);
    const Tensor4 out = train::dehaze(gen, img);
    EXPECT_EQ(out.shape(), img.shape());
    EXPECT_LT(max_abs_diff(out, img), 1e-15);
}
