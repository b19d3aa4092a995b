#include <stdexcept>

#include "hazelab/io.hpp"

namespace hazelab::io {

metrics::MetricsReport evaluate_generator(const std::string& method, const net::GeneratorParams& gen,
                                          std::span<const train::LabeledPair> validation) {
    std::map<std::string, Tensor4> outputs, truths;
    for (const auto& p : validation) {
        outputs.emplace(p.id, train::dehaze(gen, p.hazy));
        truths.emplace(p.id, p.clear);
    }
    return metrics::evaluate_dataset(method, "validation", outputs, truths);
}

AblationReport run_ablation(const train::TrainConfig& base, std::span<const train::LabeledPair> labeled,
                            std::span<const train::UnlabeledImage> unlabeled,
                            std::span<const train::LabeledPair> validation) {
    if (validation.empty()) throw std::invalid_argument("run_ablation: validation set is empty");
    AblationReport report;
    const bool switches[4][2] = {{false, false}, {true, false}, {false, true}, {true, true}};
    for (std::size_t v = 0; v < 4; ++v) {
        train::TrainConfig config = base;
        config.generator.enable_dwt_bottleneck = switches[v][0];
        config.enable_contrastive = switches[v][1];
        const auto result = train::train(config, labeled, unlabeled);
        const auto scores = evaluate_generator(kAblationLabels[v], result.generator, validation);
        report.rows.push_back({kAblationLabels[v], switches[v][0], switches[v][1], scores.mean_psnr, scores.mean_ssim,
                               result.stats.dwt_calls, result.stats.contrastive_terms});
    }
    return report;
}

std::string AblationReport::table() const {
    std::vector<metrics::TableRow> t;
    for (const auto& r : rows) t.push_back({r.label, r.psnr, r.ssim});
    return metrics::format_table(t);
}

std::string AblationReport::csv() const {
    std::vector<metrics::TableRow> t;
    for (const auto& r : rows) t.push_back({r.label, r.psnr, r.ssim});
    return metrics::format_csv(t);
}

}  // namespace hazelab::io
