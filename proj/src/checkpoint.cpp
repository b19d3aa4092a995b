#include "hazelab/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hazelab::net {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'H', 'Z', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint " + path.string() + ": truncated file");
    return v;
}

std::array<std::uint32_t, 8> encode(const GeneratorConfig& c) {
    return {static_cast<std::uint32_t>(c.base_channels),
            static_cast<std::uint32_t>(c.scales),
            static_cast<std::uint32_t>(c.blocks_per_scale),
            static_cast<std::uint32_t>(c.bottleneck_blocks),
            static_cast<std::uint32_t>(c.image_channels),
            c.enable_dwt_bottleneck ? 1u : 0u,
            c.haar_mode == wavelet::HaarMode::kPaper ? 0u : 1u,
            c.zero_init_final ? 1u : 0u};
}

GeneratorConfig decode(const std::array<std::uint32_t, 8>& v) {
    GeneratorConfig c;
    c.base_channels = v[0];
    c.scales = v[1];
    c.blocks_per_scale = v[2];
    c.bottleneck_blocks = v[3];
    c.image_channels = v[4];
    c.enable_dwt_bottleneck = v[5] != 0;
    c.haar_mode = v[6] == 0 ? wavelet::HaarMode::kPaper : wavelet::HaarMode::kOrthonormal;
    c.zero_init_final = v[7] != 0;
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const GeneratorParams& gen) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
        out.write(kMagic.data(), kMagic.size());
        put<std::uint32_t>(out, kCheckpointVersion);
        for (auto v : encode(gen.config)) put<std::uint32_t>(out, v);
        put<std::uint64_t>(out, gen.params.size());
        for (const auto& e : gen.params) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
            out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
            const Shape s = e.value.shape();
            for (auto d : {s.n, s.c, s.h, s.w}) put<std::uint64_t>(out, d);
            out.write(reinterpret_cast<const char*>(e.value.data().data()),
                      static_cast<std::streamsize>(e.value.size() * sizeof(double)));
        }
        out.flush();
        if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

GeneratorParams load_checkpoint(const std::filesystem::path& path, const std::optional<GeneratorConfig>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("checkpoint " + path.string() + ": bad magic");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint " + path.string() + ": unsupported version " + std::to_string(version));
    }
    std::array<std::uint32_t, 8> raw{};
    for (auto& v : raw) v = get<std::uint32_t>(in, path);
    GeneratorParams gen{decode(raw), {}};
    if (expected && !(*expected == gen.config)) {
        throw std::runtime_error("checkpoint " + path.string() + ": stored generator config does not match");
    }
    gen.config.validate();

    const auto count = get<std::uint64_t>(in, path);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(in, path);
        if (len > 4096) throw std::runtime_error("checkpoint " + path.string() + ": implausible name length");
        std::string name(len, '\0');
        in.read(name.data(), len);
        Shape s;
        s.n = get<std::uint64_t>(in, path);
        s.c = get<std::uint64_t>(in, path);
        s.h = get<std::uint64_t>(in, path);
        s.w = get<std::uint64_t>(in, path);
        std::vector<double> values(s.numel());
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint " + path.string() + ": truncated array '" + name + "'");
        gen.params.add(std::move(name), Tensor4(s, std::move(values)));
    }

    // The stored arrays must be exactly what this config builds.
    const GeneratorParams layout = build_generator(gen.config, 0);
    if (layout.params.size() != gen.params.size()) {
        throw std::runtime_error("checkpoint " + path.string() + ": array count does not match its config");
    }
    for (std::size_t i = 0; i < layout.params.size(); ++i) {
        if (layout.params[i].name != gen.params[i].name ||
            layout.params[i].value.shape() != gen.params[i].value.shape()) {
            throw std::runtime_error("checkpoint " + path.string() + ": array '" + gen.params[i].name +
                                     "' does not match its config");
        }
    }
    return gen;
}

}  // namespace hazelab::net
