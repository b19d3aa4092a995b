#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "hazelab/io.hpp"

namespace hazelab::io {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("bad number '" + v + "'");
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("bad boolean '" + v + "' (use true/false)");
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define SIZE_KEY(NAME, FIELD)                                                                  \
    Key {                                                                                      \
        NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<std::size_t>(v); }, \
            [](const RunConfig& c) { return std::to_string(c.FIELD); }                         \
    }
#define REAL_KEY(NAME, FIELD)                                                                \
    Key {                                                                                    \
        NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<double>(v); }, \
            [](const RunConfig& c) { return num(c.FIELD); }                                  \
    }
#define BOOL_KEY(NAME, FIELD)                                                      \
    Key {                                                                          \
        NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(v); }, \
            [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); } \
    }
#define PATH_KEY(NAME, FIELD)                                                \
    Key {                                                                    \
        NAME, [](RunConfig& c, const std::string& v) { c.FIELD = v; },       \
            [](const RunConfig& c) { return c.FIELD.generic_string(); }      \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        SIZE_KEY("epochs", train.epochs),
        SIZE_KEY("decay_start_epoch", train.decay_start_epoch),
        REAL_KEY("lr_start", train.lr_start),
        REAL_KEY("lr_end", train.lr_end),
        SIZE_KEY("crop", train.crop),
        SIZE_KEY("batch_labeled", train.batch_labeled),
        SIZE_KEY("batch_unlabeled", train.batch_unlabeled),
        SIZE_KEY("d_update_period", train.d_update_period),
        REAL_KEY("adam_beta1", train.adam.beta1),
        REAL_KEY("adam_beta2", train.adam.beta2),
        REAL_KEY("adam_eps", train.adam.eps),
        REAL_KEY("weight_decay", train.adam.weight_decay),
        REAL_KEY("alpha", train.weights.alpha),
        REAL_KEY("tv_weight", train.weights.tv_weight),
        REAL_KEY("gamma", train.weights.gamma),
        REAL_KEY("delta", train.weights.delta),
        REAL_KEY("epsilon", train.weights.epsilon),
        REAL_KEY("contrastive_balance", train.contrastive_balance),
        BOOL_KEY("enable_contrastive", train.enable_contrastive),
        BOOL_KEY("enable_dwt_bottleneck", train.generator.enable_dwt_bottleneck),
        SIZE_KEY("base_channels", train.generator.base_channels),
        SIZE_KEY("scales", train.generator.scales),
        SIZE_KEY("blocks_per_scale", train.generator.blocks_per_scale),
        SIZE_KEY("bottleneck_blocks", train.generator.bottleneck_blocks),
        Key{"haar_mode",
            [](RunConfig& c, const std::string& v) {
                if (v == "paper") c.train.generator.haar_mode = wavelet::HaarMode::kPaper;
                else if (v == "orthonormal") c.train.generator.haar_mode = wavelet::HaarMode::kOrthonormal;
                else throw std::invalid_argument("haar_mode must be paper or orthonormal");
            },
            [](const RunConfig& c) {
                return std::string(c.train.generator.haar_mode == wavelet::HaarMode::kPaper ? "paper" : "orthonormal");
            }},
        SIZE_KEY("disc_base_channels", train.discriminator.base_channels),
        SIZE_KEY("disc_blocks", train.discriminator.blocks),
        SIZE_KEY("disc_input_size", train.discriminator.input_size),
        Key{"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        SIZE_KEY("max_steps", train.max_steps),
        SIZE_KEY("checkpoint_every", train.checkpoint_every),
        PATH_KEY("labeled", labeled),
        PATH_KEY("unlabeled", unlabeled),
        PATH_KEY("validation", validation),
        PATH_KEY("out", out),
    };
    return table;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    struct Line {
        std::size_t number;
        std::string key, value;
    };
    std::vector<Line> lines;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        lines.push_back({lineno, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }

    RunConfig config;
    bool epochs_set = false, decay_set = false, crop_set = false, disc_size_set = false;
    for (const auto& l : lines) {
        if (l.key == "preset") {
            if (l.value == "toy") config.train = train::TrainConfig::toy();
            else if (l.value != "paper")
                throw std::invalid_argument(origin + ":" + std::to_string(l.number) + ": preset must be paper or toy");
        }
        epochs_set |= l.key == "epochs";
        decay_set |= l.key == "decay_start_epoch";
        crop_set |= l.key == "crop";
        disc_size_set |= l.key == "disc_input_size";
    }
    for (const auto& l : lines) {
        if (l.key == "preset") continue;
        const Key* key = nullptr;
        for (const auto& k : keys())
            if (l.key == k.name) key = &k;
        const std::string where = origin + ":" + std::to_string(l.number) + ": ";
        if (!key) throw std::invalid_argument(where + "unknown key '" + l.key + "'");
        try {
            key->set(config, l.value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + l.key + ": " + e.what());
        }
    }
    // The decay start follows the epoch count unless given explicitly.
    if (epochs_set && !decay_set) config.train.decay_start_epoch = config.train.epochs / 2;
    // Likewise the discriminator sees whole training crops.
    if (crop_set && !disc_size_set) config.train.discriminator.input_size = config.train.crop;
    try {
        config.train.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.string());
}

std::string format_run_config(const RunConfig& config) {
    std::string out;
    for (const auto& k : keys()) {
        const std::string v = k.get(config);
        if (v.empty()) continue;
        out += std::string(k.name) + " = " + v + "\n";
    }
    return out;
}

}  // namespace hazelab::io
