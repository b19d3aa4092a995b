// hazelab command line: synthesize | train | dehaze | eval | wavelet | ablate
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "hazelab/checkpoint.hpp"
#include "hazelab/haze.hpp"
#include "hazelab/io.hpp"
#include "hazelab/wavelet.hpp"

namespace fs = std::filesystem;
using namespace hazelab;

namespace {

haze::Airlight parse_airlight(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) v.push_back(std::stod(part));
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw std::invalid_argument("--airlight takes one value or r,g,b");
}

std::vector<fs::path> images_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw std::runtime_error(dir.string() + ": no .png/.ppm/.pgm images");
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

struct SynthesizeArgs {
    std::string clear_dir;
    std::size_t procedural = 0;
    std::size_t size = 48;
    std::string depth = "ramp";
    double max_depth = 1.0;
    double beta = 1.0;
    std::string airlight = "0.9";
    std::string out;
    std::uint64_t seed = 0;
    std::string ext = "png";
};

void synthesize(const SynthesizeArgs& a) {
    const fs::path out(a.out);
    fs::create_directories(out / "hazy");
    fs::create_directories(out / "clear");
    const haze::Airlight airlight = parse_airlight(a.airlight);

    std::vector<std::pair<std::string, Tensor4>> clears;
    if (!a.clear_dir.empty()) {
        for (const auto& p : images_in(a.clear_dir)) clears.emplace_back(p.stem().string(), io::load_image(p));
    } else if (a.procedural > 0) {
        for (std::size_t i = 0; i < a.procedural; ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "scene%04zu", i);
            clears.emplace_back(id, haze::procedural_clear_image(a.size, a.size, a.seed + i));
        }
    } else {
        throw std::invalid_argument("give --clear DIR or --procedural N");
    }

    const bool depth_from_dir = fs::is_directory(a.depth);
    io::Manifest manifest;
    for (const auto& [id, clear] : clears) {
        const Shape s = clear.shape();
        Tensor4 depth;
        if (depth_from_dir) {
            const Tensor4 d = io::load_image(fs::path(a.depth) / (id + ".png"));
            if (d.shape().h != s.h || d.shape().w != s.w) throw std::runtime_error("depth for '" + id + "' differs in size");
            depth = Tensor4({1, 1, s.h, s.w});
            for (std::size_t i = 0; i < s.plane(); ++i) depth[i] = d[i] * a.max_depth;
        } else {
            depth = haze::procedural_depth(haze::parse_depth_kind(a.depth), s.h, s.w, a.max_depth);
        }
        const Tensor4 hazy = haze::synthesize_haze({clear, depth, a.beta, airlight});
        const fs::path hp = out / "hazy" / (id + "." + a.ext);
        const fs::path cp = out / "clear" / (id + "." + a.ext);
        io::save_image(hazy, hp);
        io::save_image(clear, cp);
        manifest.entries.push_back({id, hp, cp, std::nullopt, 0});
    }
    io::write_manifest(out / "manifest.tsv", manifest);
    std::cout << "wrote " << manifest.entries.size() << " pairs and " << (out / "manifest.tsv").string() << "\n";
}

io::RunConfig run_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
    io::RunConfig c = path.empty() ? io::RunConfig{} : io::load_run_config(path);
    if (seed) c.train.seed = *seed;
    return c;
}

template <typename T>
void override_path(fs::path& target, const T& value) {
    if (!value.empty()) target = value;
}

void require(const fs::path& p, const char* flag) {
    if (p.empty()) throw std::invalid_argument(std::string("missing ") + flag + " (flag or config key)");
}

std::map<std::string, Tensor4> dehaze_all(const std::string& method, const std::string& checkpoint,
                                          const std::vector<train::LabeledPair>& pairs) {
    std::optional<net::GeneratorParams> gen;
    if (method == "model") {
        if (checkpoint.empty()) throw std::invalid_argument("--checkpoint is required for --method model");
        gen = net::load_checkpoint(checkpoint);
    } else if (method != "dcp" && method != "hazy") {
        throw std::invalid_argument("--method must be model, dcp or hazy");
    }
    std::map<std::string, Tensor4> out;
    for (const auto& p : pairs) {
        if (gen) out.emplace(p.id, train::dehaze(*gen, p.hazy));
        else if (method == "dcp") out.emplace(p.id, haze::dcp_dehaze(p.hazy));
        else out.emplace(p.id, p.hazy);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hazelab: semi-supervised wavelet dehazing toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;

    SynthesizeArgs syn;
    auto* cmd_syn = app.add_subcommand("synthesize", "render hazy/clear pairs and a manifest");
    cmd_syn->add_option("--clear", syn.clear_dir, "directory of clear images");
    cmd_syn->add_option("--procedural", syn.procedural, "generate N procedural clear scenes instead");
    cmd_syn->add_option("--size", syn.size, "procedural scene size in pixels");
    cmd_syn->add_option("--depth", syn.depth, "ramp|radial|constant or a directory of depth PNGs");
    cmd_syn->add_option("--max-depth", syn.max_depth, "depth scale");
    cmd_syn->add_option("--beta", syn.beta, "scattering coefficient")->check(CLI::NonNegativeNumber);
    cmd_syn->add_option("--airlight", syn.airlight, "A or r,g,b in [0,1]");
    cmd_syn->add_option("--format", syn.ext, "png or ppm")->check(CLI::IsMember({"png", "ppm"}));
    cmd_syn->add_option("--seed", syn.seed);
    cmd_syn->add_option("--out", syn.out)->required();

    std::string labeled, unlabeled, validation, checkpoint, input, method = "model", label, mode = "paper";
    auto* cmd_train = app.add_subcommand("train", "train a generator");
    auto* cmd_dehaze = app.add_subcommand("dehaze", "dehaze one image or every hazy image of a manifest");
    auto* cmd_eval = app.add_subcommand("eval", "PSNR/SSIM table over a labeled manifest");
    auto* cmd_wavelet = app.add_subcommand("wavelet", "write the four Haar sub-bands of an image");
    auto* cmd_ablate = app.add_subcommand("ablate", "train and score the four ablation variants");
    for (auto* c : {cmd_train, cmd_ablate}) {
        c->add_option("--config", config_path, "key = value run config");
        c->add_option("--seed", seed);
        c->add_option("--labeled", labeled, "labeled manifest");
        c->add_option("--unlabeled", unlabeled, "unlabeled manifest");
        c->add_option("--out", out, "output directory");
    }
    cmd_ablate->add_option("--validation", validation, "labeled validation manifest");
    cmd_dehaze->add_option("--checkpoint", checkpoint);
    cmd_dehaze->add_option("--method", method, "model|dcp");
    cmd_dehaze->add_option("--input", input, "image or manifest (.tsv)")->required();
    cmd_dehaze->add_option("--out", out, "output image or directory")->required();
    cmd_eval->add_option("--manifest", input, "labeled manifest")->required();
    cmd_eval->add_option("--checkpoint", checkpoint);
    cmd_eval->add_option("--method", method, "model|dcp|hazy");
    cmd_eval->add_option("--label", label, "row label");
    cmd_eval->add_option("--out", out, "write the CSV here as well");
    cmd_wavelet->add_option("image", input, "input image")->required();
    cmd_wavelet->add_option("--mode", mode)->check(CLI::IsMember({"paper", "orthonormal"}));
    cmd_wavelet->add_option("--out-dir,--out", out, "directory for ll/lh/hl/hh.png")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_syn) {
            synthesize(syn);
        } else if (*cmd_train) {
            io::RunConfig rc = run_config(config_path, seed);
            override_path(rc.labeled, labeled);
            override_path(rc.unlabeled, unlabeled);
            override_path(rc.out, out);
            require(rc.labeled, "--labeled");
            require(rc.unlabeled, "--unlabeled");
            require(rc.out, "--out");
            const auto pairs = io::load_labeled(io::load_manifest(rc.labeled, io::ManifestKind::kLabeled));
            const auto hazy = io::load_unlabeled(io::load_manifest(rc.unlabeled, io::ManifestKind::kUnlabeled));
            fs::create_directories(rc.out);
            write_text(rc.out / "config.txt", io::format_run_config(rc));
            const auto result = train::train(rc.train, pairs, hazy,
                                             {rc.out / "generator.hzck", rc.out / "train_log.csv"},
                                             [](const train::LogRow& r) {
                                                 if (r.step % 10 == 0)
                                                     std::cout << "step " << r.step << " epoch " << r.epoch
                                                               << " total " << r.report.total << "\n";
                                             });
            std::cout << "trained " << result.stats.steps << " steps (" << result.stats.discriminator_updates
                      << " discriminator updates) -> " << (rc.out / "generator.hzck").string() << "\n";
        } else if (*cmd_dehaze) {
            if (fs::path(input).extension() == ".tsv") {
                const auto m = io::load_manifest(input, io::ManifestKind::kUnlabeled);
                fs::create_directories(out);
                std::vector<train::LabeledPair> items;
                for (const auto& e : m.entries) {
                    const Tensor4 img = io::load_image(e.hazy);
                    items.push_back({e.id, img, img});
                }
                for (const auto& [id, img] : dehaze_all(method, checkpoint, items)) {
                    io::save_image(img, fs::path(out) / (id + ".png"));
                }
            } else {
                const Tensor4 img = io::load_image(input);
                io::save_image(dehaze_all(method, checkpoint, {{"input", img, img}}).at("input"), out);
            }
        } else if (*cmd_eval) {
            const auto pairs = io::load_labeled(io::load_manifest(input, io::ManifestKind::kLabeled));
            std::map<std::string, Tensor4> truths;
            for (const auto& p : pairs) truths.emplace(p.id, p.clear);
            const auto report = metrics::evaluate_dataset(label.empty() ? method : label, fs::path(input).stem(),
                                                          dehaze_all(method, checkpoint, pairs), truths);
            const std::vector<metrics::TableRow> rows{metrics::summary_row(report)};
            std::cout << metrics::format_table(rows);
            if (!out.empty()) write_text(out, metrics::format_csv(rows));
        } else if (*cmd_wavelet) {
            const auto m = mode == "paper" ? wavelet::HaarMode::kPaper : wavelet::HaarMode::kOrthonormal;
            const Tensor4 img = io::load_image(input);
            const auto bands = wavelet::dwt2(img, m);
            fs::create_directories(out);
            io::save_image(wavelet::normalize_for_display(bands.ll), fs::path(out) / "ll.png");
            io::save_image(wavelet::normalize_for_display(bands.lh), fs::path(out) / "lh.png");
            io::save_image(wavelet::normalize_for_display(bands.hl), fs::path(out) / "hl.png");
            io::save_image(wavelet::normalize_for_display(bands.hh), fs::path(out) / "hh.png");
            std::printf("reconstruction max abs error %.3g\n", max_abs_diff(wavelet::iwt2(bands, m), img));
        } else if (*cmd_ablate) {
            io::RunConfig rc = run_config(config_path, seed);
            override_path(rc.labeled, labeled);
            override_path(rc.unlabeled, unlabeled);
            override_path(rc.validation, validation);
            override_path(rc.out, out);
            require(rc.labeled, "--labeled");
            require(rc.unlabeled, "--unlabeled");
            require(rc.validation, "--validation");
            require(rc.out, "--out");
            const auto pairs = io::load_labeled(io::load_manifest(rc.labeled, io::ManifestKind::kLabeled));
            const auto hazy = io::load_unlabeled(io::load_manifest(rc.unlabeled, io::ManifestKind::kUnlabeled));
            const auto val = io::load_labeled(io::load_manifest(rc.validation, io::ManifestKind::kLabeled));
            const auto report = io::run_ablation(rc.train, pairs, hazy, val);
            fs::create_directories(rc.out);
            write_text(rc.out / "ablation.txt", report.table());
            write_text(rc.out / "ablation.csv", report.csv());
            std::string counters = "method,dwt_calls,contrastive_terms\n";
            for (const auto& r : report.rows)
                counters += r.label + "," + std::to_string(r.dwt_calls) + "," + std::to_string(r.contrastive_terms) + "\n";
            write_text(rc.out / "ablation_counters.csv", counters);
            std::cout << report.table();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
