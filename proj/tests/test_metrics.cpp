#include <gtest/gtest.h>

#include <cmath>

#include "hazelab/metrics.hpp"
#include "metric_oracle.hpp"
#include "test_support.hpp"

using namespace hazelab;
using namespace hazelab::testing;

TEST(Psnr, ClosedFormsAndCap) {
    const Tensor4 a({1, 3, 4, 4}, 0.5);
    EXPECT_EQ(metrics::psnr(a, a), 99.0);
    Tensor4 b = a;
    for (auto& v : b.data()) v += 0.1;  // mse 0.01 -> 20 dB
    EXPECT_NEAR(metrics::psnr(a, b), 20.0, 1e-9);
    Tensor4 tiny = a;
    tiny[0] += 1e-9;  // would exceed the cap
    EXPECT_EQ(metrics::psnr(a, tiny), 99.0);
    EXPECT_THROW(metrics::psnr(a, Tensor4({1, 3, 4, 5})), std::invalid_argument);
}

TEST(Ssim, IdenticalIsOneAndSymmetric) {
    std::mt19937_64 rng(1);
    const Tensor4 a = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
    const Tensor4 b = random_tensor({1, 3, 16, 16}, rng, 0.0, 1.0);
    EXPECT_EQ(metrics::ssim(a, a), 1.0);
    EXPECT_NEAR(metrics::ssim(a, b), metrics::ssim(b, a), 1e-12);
    EXPECT_LT(metrics::ssim(a, b), 0.5);
    EXPECT_THROW(metrics::ssim(Tensor4({1, 1, 8, 8}), Tensor4({1, 1, 8, 8})), std::invalid_argument);
}

TEST(Metrics, AgreeWithLoopReference) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const Tensor4 a = random_tensor({1, 3, std::size_t(14 + i % 5), std::size_t(12 + i % 3)}, rng, 0.0, 1.0);
        Tensor4 b = a;
        std::normal_distribution<double> noise(0.0, 0.05 + 0.01 * i);
        for (auto& v : b.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
        EXPECT_NEAR(metrics::psnr(a, b), oracle::psnr(a, b), 1e-10);
        EXPECT_NEAR(metrics::ssim(a, b), oracle::ssim(a, b), 1e-10);
    }
}

TEST(GaussianTaps, NormalizedAndSymmetric) {
    const auto t = metrics::gaussian_taps(11, 1.5);
    double s = 0.0;
    for (double v : t) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(t[i], t[10 - i]);
}

TEST(EvaluateDataset, PairsByIdAndReportsUnmatched) {
    std::map<std::string, Tensor4> out, gt;
    std::mt19937_64 rng(3);
    for (const char* id : {"b", "a"}) {
        gt[id] = random_tensor({1, 3, 12, 12}, rng, 0.0, 1.0);
        out[id] = gt[id];
    }
    const auto r = metrics::evaluate_dataset("m", "d", out, gt);
    ASSERT_EQ(r.images.size(), 2u);
    EXPECT_EQ(r.images[0].id, "a");
    EXPECT_EQ(r.mean_psnr, 99.0);
    EXPECT_EQ(r.mean_ssim, 1.0);
    out.erase("a");
    out["zz"] = gt["b"];
    try {
        metrics::evaluate_dataset("m", "d", out, gt);
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("zz"), std::string::npos);
        EXPECT_NE(msg.find(" a"), std::string::npos);
    }
}

TEST(Tables, CsvAndAligned) {
    const std::vector<metrics::TableRow> rows = {{"Baseline* + L", 26.021, 0.9254}, {"Ours", 26.76, 0.971}};
    EXPECT_EQ(metrics::format_csv(rows), "method,PSNR,SSIM\nBaseline* + L,26.02,0.925\nOurs,26.76,0.971\n");
    const std::string t = metrics::format_table(rows);
    EXPECT_NE(t.find("Baseline* + L    26.02   0.925"), std::string::npos);
    EXPECT_NE(t.find("Ours             26.76   0.971"), std::string::npos);
}
