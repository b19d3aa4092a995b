#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hazelab/checkpoint.hpp"
#include "hazelab/network.hpp"
#include "test_support.hpp"

using namespace hazelab;
using namespace hazelab::testing;

namespace {

net::GeneratorConfig tiny() {
    net::GeneratorConfig c;
    c.base_channels = 2;
    c.scales = 2;
    c.blocks_per_scale = 1;
    return c;
}

}  // namespace

TEST(Generator, ParameterCountFrozen) {
    // Worked out by hand from the layer table in docs/architecture.md.
    net::GeneratorConfig c;
    EXPECT_EQ(net::generator_parameter_count(c), 1862211u);
    EXPECT_EQ(net::build_generator(c, 0).params.scalar_count(), 1862211u);
    c.enable_dwt_bottleneck = false;
    EXPECT_EQ(net::generator_parameter_count(c), 690115u);
    EXPECT_EQ(net::build_generator(c, 0).params.scalar_count(), 690115u);
}

TEST(Generator, CountMatchesBuildAcrossConfigs) {
    for (std::size_t scales : {1, 2, 3})
        for (std::size_t blocks : {1, 2})
            for (bool dwt : {false, true}) {
                net::GeneratorConfig c = tiny();
                c.scales = scales;
                c.blocks_per_scale = blocks;
                c.bottleneck_blocks = blocks;
                c.enable_dwt_bottleneck = dwt;
                EXPECT_EQ(net::generator_parameter_count(c), net::build_generator(c, 1).params.scalar_count());
            }
}

TEST(Generator, IdentityAtInitIsBitExact) {
    std::mt19937_64 rng(1);
    const auto gen = net::build_generator(tiny(), 5);
    const Tensor4 x = random_tensor({2, 3, 8, 12}, rng);
    Tape t;
    const net::BoundParams p(t, gen.params, false);
    EXPECT_EQ(net::generator_forward(gen.config, p, t.constant(x)).value().vec(), x.vec());
}

TEST(Generator, SeedDeterminesInit) {
    EXPECT_TRUE(net::build_generator(tiny(), 3).params == net::build_generator(tiny(), 3).params);
    EXPECT_FALSE(net::build_generator(tiny(), 3).params == net::build_generator(tiny(), 4).params);
}

TEST(Generator, ShapePreservedAndSizeChecked) {
    auto c = tiny();
    c.zero_init_final = false;
    const auto gen = net::build_generator(c, 2);
    std::mt19937_64 rng(2);
    EXPECT_EQ(net::generator_infer(gen, random_tensor({1, 3, 16, 8}, rng)).shape(), (Shape{1, 3, 16, 8}));
    EXPECT_THROW(net::generator_infer(gen, random_tensor({1, 3, 6, 8}, rng)), std::invalid_argument);
    EXPECT_THROW(net::generator_infer(gen, random_tensor({1, 2, 8, 8}, rng)), std::invalid_argument);
}

TEST(Generator, InferenceClampsToSignedRange) {
    auto c = tiny();
    c.zero_init_final = false;
    auto gen = net::build_generator(c, 2);
    gen.params.get("tail.b").fill(5.0);
    const Tensor4 clamped = net::generator_infer(gen, Tensor4({1, 3, 8, 8}, 0.5));
    for (double v : clamped.data()) EXPECT_EQ(v, 1.0);
}

TEST(Generator, DwtSwitchControlsCalls) {
    for (bool dwt : {false, true}) {
        auto c = tiny();
        c.enable_dwt_bottleneck = dwt;
        net::ForwardStats stats;
        net::generator_infer(net::build_generator(c, 0), Tensor4({1, 3, 8, 8}, 0.1), &stats);
        EXPECT_EQ(stats.dwt_calls, dwt ? 1u : 0u);
        EXPECT_EQ(stats.iwt_calls, dwt ? 1u : 0u);
        EXPECT_EQ(net::build_generator(c, 0).params.contains("bottleneck.fuse.w"), dwt);
    }
}

TEST(Generator, BottleneckIsTransparentWithZeroBlocks) {
    // With residual weights zeroed, the DWT -> identity fuse -> IWT path is the identity.
    auto gen = net::build_generator(tiny(), 7);
    for (std::size_t i = 0; i < gen.params.size(); ++i)
        if (gen.params[i].name.rfind("bottleneck.block", 0) == 0) gen.params[i].value.fill(0.0);
    std::mt19937_64 rng(3);
    const Tensor4 f = random_tensor({2, 4, 4, 6}, rng);
    Tape t;
    const net::BoundParams p(t, gen.params, false);
    EXPECT_LT(max_abs_diff(net::bottleneck_forward(gen.config, p, t.constant(f)).value(), f), 1e-12);
}

TEST(Generator, EveryParameterGroupGetsGradient) {
    auto c = tiny();
    c.zero_init_final = false;
    const auto gen = net::build_generator(c, 11);
    std::mt19937_64 rng(4);
    Tape t;
    const net::BoundParams p(t, gen.params, true);
    const Var out = net::generator_forward(gen.config, p, t.constant(random_tensor({2, 3, 8, 8}, rng)));
    t.backward(contract(out));
    const auto grads = p.gradients();
    for (std::size_t i = 0; i < grads.size(); ++i) {
        double norm = 0.0;
        for (double g : grads[i].data()) norm += g * g;
        EXPECT_GT(norm, 0.0) << gen.params[i].name;
    }
}

TEST(Generator, ParameterGradientsMatchFiniteDifferences) {
    auto c = tiny();
    c.zero_init_final = false;
    c.base_channels = 1;
    c.scales = 1;
    auto gen = net::build_generator(c, 13);
    std::mt19937_64 rng(5);
    const Tensor4 x = random_tensor({1, 3, 4, 4}, rng);
    auto loss_at = [&](const net::GeneratorParams& g) {
        Tape t;
        return contract(net::generator_forward(c, net::BoundParams(t, g.params, false), t.constant(x))).value().item();
    };
    Tape t;
    const net::BoundParams p(t, gen.params, true);
    t.backward(contract(net::generator_forward(c, p, t.constant(x))));
    const auto grads = p.gradients();
    for (std::size_t i = 0; i < gen.params.size(); ++i) {
        double diff = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < gen.params[i].value.size(); ++j) {
            double& w = gen.params[i].value[j];
            const double w0 = w;
            w = w0 + 1e-5;
            const double up = loss_at(gen);
            w = w0 - 1e-5;
            const double down = loss_at(gen);
            w = w0;
            const double numeric = (up - down) / 2e-5;
            diff += (numeric - grads[i][j]) * (numeric - grads[i][j]);
            norm += numeric * numeric;
        }
        EXPECT_LT(std::sqrt(diff), 1e-4 * std::max(std::sqrt(norm), 1e-8)) << gen.params[i].name;
    }
}

TEST(Discriminator, OutputsProbabilities) {
    const auto d = net::build_discriminator({}, 1);
    std::mt19937_64 rng(6);
    const Tensor4 p = net::discriminator_infer(d, random_tensor({3, 3, 32, 32}, rng));
    EXPECT_EQ(p.shape(), (Shape{3, 1, 1, 1}));
    for (double v : p.data()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_THROW(net::discriminator_infer(d, random_tensor({1, 3, 16, 16}, rng)), std::invalid_argument);
}

TEST(ParamSet, DuplicateNameRejected) {
    net::ParamSet s;
    s.add("a", Tensor4({1, 1, 1, 1}));
    EXPECT_THROW(s.add("a", Tensor4({1, 1, 1, 1})), std::invalid_argument);
    EXPECT_THROW(s.index_of("b"), std::out_of_range);
}

TEST(Checkpoint, RoundTripIsExact) {
    const auto dir = std::filesystem::temp_directory_path() / "hazelab_ckpt_test";
    std::filesystem::create_directories(dir);
    auto c = tiny();
    c.enable_dwt_bottleneck = false;
    const auto gen = net::build_generator(c, 21);
    net::save_checkpoint(dir / "g.hzck", gen);
    const auto back = net::load_checkpoint(dir / "g.hzck", c);
    EXPECT_TRUE(back.config == c);
    EXPECT_TRUE(back.params == gen.params);
    EXPECT_THROW(net::load_checkpoint(dir / "g.hzck", tiny()), std::runtime_error);
    EXPECT_FALSE(std::filesystem::exists(dir / "g.hzck.tmp"));
}

TEST(Checkpoint, CorruptFilesRejected) {
    const auto dir = std::filesystem::temp_directory_path() / "hazelab_ckpt_test";
    std::filesystem::create_directories(dir);
    EXPECT_THROW(net::load_checkpoint(dir / "missing.hzck"), std::runtime_error);
    const auto gen = net::build_generator(tiny(), 1);
    net::save_checkpoint(dir / "t.hzck", gen);
    std::filesystem::resize_file(dir / "t.hzck", std::filesystem::file_size(dir / "t.hzck") - 9);
    EXPECT_THROW(net::load_checkpoint(dir / "t.hzck"), std::runtime_error);
    {
        std::ofstream junk(dir / "j.hzck", std::ios::binary);
        junk << "NOPE0000";
    }
    EXPECT_THROW(net::load_checkpoint(dir / "j.hzck"), std::runtime_error);
}
