#pragma once

#include <map>
#include <string>
#include <vector>

#include "hazelab/tensor.hpp"

namespace hazelab::metrics {

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) for images in [0,1], capped at 99 dB (identical images).
double psnr(const Tensor4& a, const Tensor4& b);

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

// Mean SSIM over all fully-contained Gaussian windows, averaged over channels
// and samples. Throws if the window exceeds the image.
double ssim(const Tensor4& a, const Tensor4& b, const SsimOptions& options = {});

// Normalized 1D Gaussian taps (the 2D window is their outer product).
std::vector<double> gaussian_taps(std::size_t window, double sigma);

struct ImageScore {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricsReport {
    std::string method;
    std::string dataset;
    std::vector<ImageScore> images;  // sorted by id
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

// Pairs outputs and ground truths by id. Throws listing unmatched ids.
MetricsReport evaluate_dataset(const std::string& method, const std::string& dataset,
                               const std::map<std::string, Tensor4>& outputs,
                               const std::map<std::string, Tensor4>& ground_truths,
                               const SsimOptions& options = {});

struct TableRow {
    std::string method;
    double psnr = 0.0;
    double ssim = 0.0;
};

// "method,PSNR,SSIM" rows; PSNR with 2 decimals, SSIM with 3.
std::string format_csv(const std::vector<TableRow>& rows);
// Aligned plain-text table with the same columns.
std::string format_table(const std::vector<TableRow>& rows);
TableRow summary_row(const MetricsReport& report);

}  // namespace hazelab::metrics
