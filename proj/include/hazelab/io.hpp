#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hazelab/metrics.hpp"
#include "hazelab/trainer.hpp"

namespace hazelab::io {

// PNG (8-bit, gray or RGB, alpha dropped) and binary PNM (P5/P6, maxval 255),
// chosen by extension. Returns (1,3,h,w) in [0,1]; gray is replicated.
Tensor4 load_image(const std::filesystem::path& path);
// Clamps to [0,1] and writes round(v*255). Accepts (1,1,h,w) or (1,3,h,w).
void save_image(const Tensor4& image, const std::filesystem::path& path);
std::uint8_t quantize(double v);

enum class ManifestKind { kLabeled, kUnlabeled };

struct ManifestEntry {
    std::string id;
    std::filesystem::path hazy;
    std::optional<std::filesystem::path> clear;
    std::optional<std::filesystem::path> depth;
    std::size_t line = 0;
};

struct Manifest {
    ManifestKind kind = ManifestKind::kLabeled;
    std::vector<ManifestEntry> entries;  // file order
};

// Tab-separated `id  hazy  [clear]  [depth]`, '#' starts a comment line.
// Relative paths resolve against the manifest's directory. Every problem is
// reported with its line number at load time.
Manifest load_manifest(const std::filesystem::path& path, ManifestKind kind);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

std::vector<train::LabeledPair> load_labeled(const Manifest& manifest);
std::vector<train::UnlabeledImage> load_unlabeled(const Manifest& manifest);

struct RunConfig {
    train::TrainConfig train = train::TrainConfig::paper();
    std::filesystem::path labeled;
    std::filesystem::path unlabeled;
    std::filesystem::path validation;
    std::filesystem::path out;
};

// Flat `key = value` file; '#' comments. `preset = paper|toy` picks the
// starting point (paper by default) regardless of where it appears.
// Unknown keys and malformed values are errors naming the line.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
// Every recognized key with its value, one per line; parses back to `config`.
std::string format_run_config(const RunConfig& config);

struct AblationRow {
    std::string label;
    bool enable_dwt_bottleneck = false;
    bool enable_contrastive = false;
    double psnr = 0.0;
    double ssim = 0.0;
    std::size_t dwt_calls = 0;
    std::size_t contrastive_terms = 0;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::string table() const;
    std::string csv() const;
};

inline constexpr const char* kAblationLabels[4] = {"Baseline* + L", "Baseline* + DWT & IWT",
                                                   "Baseline* + Contrastive loss", "Ours"};

// Trains and evaluates the four variants from `base` with the same seed and
// data; only the two switches differ between rows.
AblationReport run_ablation(const train::TrainConfig& base, std::span<const train::LabeledPair> labeled,
                            std::span<const train::UnlabeledImage> unlabeled,
                            std::span<const train::LabeledPair> validation);

// Mean PSNR/SSIM of `gen` on a validation set, full images.
metrics::MetricsReport evaluate_generator(const std::string& method, const net::GeneratorParams& gen,
                                          std::span<const train::LabeledPair> validation);

}  // namespace hazelab::io
