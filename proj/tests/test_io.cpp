#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hazelab/haze.hpp"
#include "hazelab/io.hpp"
#include "test_support.hpp"

using namespace hazelab;
using namespace hazelab::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("hazelab_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

Tensor4 bytes_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> b(0, 255);
    Tensor4 t({1, 3, h, w});
    for (auto& v : t.data()) v = b(rng) / 255.0;
    return t;
}

}  // namespace

TEST(Quantize, RoundingAndClamping) {
    EXPECT_EQ(io::quantize(0.5), 128);
    EXPECT_EQ(io::quantize(1.2), 255);
    EXPECT_EQ(io::quantize(-0.1), 0);
    EXPECT_EQ(io::quantize(0.0), 0);
    EXPECT_EQ(io::quantize(1.0), 255);
    for (int v = 0; v < 256; ++v) EXPECT_EQ(io::quantize(v / 255.0), v);
}

class ImageFormat : public ::testing::TestWithParam<std::string> {};

TEST_P(ImageFormat, RoundTripsEightBitExactly) {
    const fs::path dir = scratch("fmt_" + GetParam());
    const Tensor4 img = bytes_image(7, 9, 1);
    const fs::path a = dir / ("a." + GetParam()), b = dir / ("b." + GetParam());
    io::save_image(img, a);
    const Tensor4 back = io::load_image(a);
    EXPECT_EQ(back.vec(), img.vec());
    io::save_image(back, b);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    EXPECT_EQ(std::string(std::istreambuf_iterator<char>(fa), {}), std::string(std::istreambuf_iterator<char>(fb), {}));
}

TEST_P(ImageFormat, BlackAndWhite) {
    const fs::path dir = scratch("bw_" + GetParam());
    io::save_image(Tensor4({1, 3, 2, 3}, 0.0), dir / ("k." + GetParam()));
    io::save_image(Tensor4({1, 3, 2, 3}, 1.0), dir / ("w." + GetParam()));
    const Tensor4 black = io::load_image(dir / ("k." + GetParam()));
    for (double v : black.data()) EXPECT_EQ(v, 0.0);
    const Tensor4 white = io::load_image(dir / ("w." + GetParam()));
    for (double v : white.data()) EXPECT_EQ(v, 1.0);
}

INSTANTIATE_TEST_SUITE_P(Formats, ImageFormat, ::testing::Values("png", "ppm"));

TEST(Image, GrayscaleReplicated) {
    const fs::path dir = scratch("gray");
    Tensor4 g({1, 1, 2, 2}, std::vector<double>{0, 64 / 255.0, 128 / 255.0, 1});
    for (const char* ext : {"g.png", "g.pgm"}) {
        io::save_image(g, dir / ext);
        const Tensor4 rgb = io::load_image(dir / ext);
        ASSERT_EQ(rgb.shape(), (Shape{1, 3, 2, 2}));
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(rgb.plane(0, c)[i], g[i]);
    }
}

TEST(Image, ErrorsNameThePath) {
    const fs::path dir = scratch("err");
    try {
        io::load_image(dir / "nope.png");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("nope.png"), std::string::npos);
    }
    write(dir / "bad.png", "not a png");
    EXPECT_THROW(io::load_image(dir / "bad.png"), std::runtime_error);
    write(dir / "short.ppm", "P6\n4 4\n255\nabc");
    EXPECT_THROW(io::load_image(dir / "short.ppm"), std::runtime_error);
    EXPECT_THROW(io::load_image(dir / "short.jpg"), std::runtime_error);
    EXPECT_THROW(io::save_image(Tensor4({1, 3, 2, 2}), dir / "missing_dir" / "x.png"), std::runtime_error);
}

TEST(Manifest, LoadsInOrderAndResolvesRelativePaths) {
    const fs::path dir = scratch("manifest");
    for (const char* f : {"h1.png", "c1.png", "h2.png", "c2.png", "d2.png"}) write(dir / f, "");
    write(dir / "m.tsv", "# comment\nsecond\th2.png\tc2.png\td2.png\n\nfirst\th1.png\tc1.png\n");
    const auto m = io::load_manifest(dir / "m.tsv", io::ManifestKind::kLabeled);
    ASSERT_EQ(m.entries.size(), 2u);
    EXPECT_EQ(m.entries[0].id, "second");
    EXPECT_EQ(m.entries[0].depth, dir / "d2.png");
    EXPECT_EQ(m.entries[1].hazy, dir / "h1.png");
    EXPECT_FALSE(m.entries[1].depth.has_value());
    EXPECT_EQ(m.entries[1].line, 4u);
}

TEST(Manifest, ValidationErrors) {
    const fs::path dir = scratch("manifest_err");
    write(dir / "h.png", "");
    write(dir / "c.png", "");
    auto expect_error = [&](const std::string& text, const std::string& needle, io::ManifestKind kind) {
        write(dir / "m.tsv", text);
        try {
            io::load_manifest(dir / "m.tsv", kind);
            ADD_FAILURE() << "no error for: " << text;
        } catch (const std::runtime_error& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("", "empty manifest", io::ManifestKind::kLabeled);
    expect_error("# only comments\n", "empty manifest", io::ManifestKind::kUnlabeled);
    expect_error("a\th.png\n", "m.tsv:1: labeled entry 'a' has no clear path", io::ManifestKind::kLabeled);
    expect_error("a\th.png\tc.png\na\th.png\tc.png\n", ":2: duplicate id 'a'", io::ManifestKind::kLabeled);
    expect_error("a\n", ":1: missing id or hazy path", io::ManifestKind::kUnlabeled);
    expect_error("a\th.png\tgone.png\n", ":1: missing file", io::ManifestKind::kLabeled);
    write(dir / "ok.tsv", "a\th.png\n");
    EXPECT_EQ(io::load_manifest(dir / "ok.tsv", io::ManifestKind::kUnlabeled).entries.size(), 1u);
}

TEST(Manifest, WriteThenLoad) {
    const fs::path dir = scratch("manifest_rt");
    io::Manifest m;
    for (int i = 0; i < 3; ++i) {
        const std::string id = "s" + std::to_string(i);
        write(dir / (id + "_h.ppm"), "");
        write(dir / (id + "_c.ppm"), "");
        m.entries.push_back({id, dir / (id + "_h.ppm"), dir / (id + "_c.ppm"), std::nullopt, 0});
    }
    io::write_manifest(dir / "m.tsv", m);
    const auto back = io::load_manifest(dir / "m.tsv", io::ManifestKind::kLabeled);
    ASSERT_EQ(back.entries.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back.entries[i].id, m.entries[i].id);
        EXPECT_EQ(fs::weakly_canonical(back.entries[i].hazy), fs::weakly_canonical(m.entries[i].hazy));
    }
}

TEST(RunConfig, DefaultsAreFullScalePreset) {
    const auto c = io::parse_run_config("");
    EXPECT_EQ(c.train.epochs, 300u);
    EXPECT_EQ(c.train.decay_start_epoch, 150u);
    EXPECT_EQ(c.train.crop, 256u);
    EXPECT_EQ(c.train.lr_start, 1e-4);
    EXPECT_EQ(c.train.lr_end, 1e-6);
    EXPECT_EQ(c.train.adam.beta2, 0.99);
    EXPECT_EQ(c.train.adam.weight_decay, 1e-4);
    EXPECT_EQ(c.train.d_update_period, 5u);
    EXPECT_EQ(c.train.weights.alpha, 1e-2);
    EXPECT_EQ(c.train.weights.epsilon, 1e-1);
}

TEST(RunConfig, ParsesKeysAndPreset) {
    const auto c = io::parse_run_config(
        "# toy run\nepochs = 20\npreset = toy\nenable_dwt_bottleneck = false\nenable_contrastive=true\n"
        "seed = 42\nlabeled = data/l.tsv\ngamma = 2e-5\n");
    EXPECT_EQ(c.train.epochs, 20u);
    EXPECT_EQ(c.train.decay_start_epoch, 10u);
    EXPECT_EQ(c.train.crop, 32u);
    EXPECT_FALSE(c.train.generator.enable_dwt_bottleneck);
    EXPECT_TRUE(c.train.enable_contrastive);
    EXPECT_EQ(c.train.seed, 42u);
    EXPECT_EQ(c.labeled, "data/l.tsv");
    EXPECT_EQ(c.train.weights.gamma, 2e-5);
}

TEST(RunConfig, ErrorsNameTheLine) {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            io::parse_run_config(text, "cfg");
            ADD_FAILURE() << text;
        } catch (const std::invalid_argument& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("epochs = 3\nbogus = 1\n", "cfg:2: unknown key 'bogus'");
    expect_error("epochs = many\n", "cfg:1: epochs: bad number");
    expect_error("just words\n", "cfg:1: expected key = value");
    expect_error("enable_contrastive = maybe\n", "cfg:1");
    expect_error("lr_end = 1\n", "lr_start > lr_end");
}

TEST(RunConfig, FormatParsesBack) {
    auto c = io::parse_run_config("preset = toy\nseed = 9\nenable_contrastive = false\nout = runs/x\n");
    const auto back = io::parse_run_config(io::format_run_config(c));
    EXPECT_EQ(io::format_run_config(back), io::format_run_config(c));
    EXPECT_EQ(back.train.seed, 9u);
    EXPECT_FALSE(back.train.enable_contrastive);
    EXPECT_EQ(back.train.crop, 32u);
}

TEST(Ablation, FourLabelledVariantsWithCounters) {
    auto cfg = train::TrainConfig::toy();
    cfg.generator.base_channels = 2;
    cfg.generator.scales = 2;
    cfg.generator.blocks_per_scale = 1;
    cfg.discriminator.blocks = 2;
    cfg.discriminator.base_channels = 2;
    cfg.crop = 16;
    cfg.discriminator.input_size = 16;
    cfg.epochs = 2;
    cfg.decay_start_epoch = 1;
    std::vector<train::LabeledPair> lab, val;
    std::vector<train::UnlabeledImage> unl;
    for (std::uint64_t i = 0; i < 2; ++i) {
        const Tensor4 clear = haze::procedural_clear_image(16, 16, i);
        const Tensor4 hazy =
            haze::synthesize_haze({clear, haze::procedural_depth(haze::DepthKind::kRamp, 16, 16), 1.0, {1, 1, 1}});
        lab.push_back({"l" + std::to_string(i), hazy, clear});
        val.push_back({"v" + std::to_string(i), hazy, clear});
        unl.push_back({"u" + std::to_string(i), hazy});
    }
    const auto report = io::run_ablation(cfg, lab, unl, val);
    ASSERT_EQ(report.rows.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(report.rows[i].label, io::kAblationLabels[i]);
    EXPECT_EQ(report.rows[0].dwt_calls, 0u);
    EXPECT_EQ(report.rows[0].contrastive_terms, 0u);
    EXPECT_GT(report.rows[1].dwt_calls, 0u);
    EXPECT_EQ(report.rows[1].contrastive_terms, 0u);
    EXPECT_EQ(report.rows[2].dwt_calls, 0u);
    EXPECT_GT(report.rows[2].contrastive_terms, 0u);
    EXPECT_GT(report.rows[3].dwt_calls, 0u);
    EXPECT_GT(report.rows[3].contrastive_terms, 0u);
    EXPECT_NE(report.table().find("Baseline* + DWT & IWT"), std::string::npos);
    EXPECT_EQ(report.csv().substr(0, 16), "method,PSNR,SSIM");
}
