#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hazelab/io.hpp"

namespace hazelab::io {
namespace {

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

[[noreturn]] void fail(const std::filesystem::path& p, const std::string& what) {
    throw std::runtime_error(p.string() + ": " + what);
}

Tensor4 from_bytes(const std::vector<std::uint8_t>& px, std::size_t h, std::size_t w, std::size_t channels) {
    Tensor4 out({1, 3, h, w});
    for (std::size_t c = 0; c < 3; ++c) {
        double* dst = out.plane(0, c);
        const std::size_t src_c = channels == 1 ? 0 : c;
        for (std::size_t i = 0; i < h * w; ++i) dst[i] = px[i * channels + src_c] / 255.0;
    }
    return out;
}

std::vector<std::uint8_t> to_bytes(const Tensor4& img) {
    const Shape s = img.shape();
    std::vector<std::uint8_t> px(s.plane() * s.c);
    for (std::size_t c = 0; c < s.c; ++c) {
        const double* src = img.plane(0, c);
        for (std::size_t i = 0; i < s.plane(); ++i) px[i * s.c + c] = quantize(src[i]);
    }
    return px;
}

// Skips whitespace and '#' comments between PNM header fields.
std::size_t pnm_field(std::istream& in, const std::filesystem::path& p) {
    for (;;) {
        const int ch = in.peek();
        if (ch == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    std::size_t v = 0;
    if (!(in >> v)) fail(p, "malformed PNM header");
    return v;
}

Tensor4 load_pnm(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(p, "cannot open image");
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) fail(p, "not a binary PGM/PPM file");
    const std::size_t channels = magic[1] == '6' ? 3 : 1;
    const std::size_t w = pnm_field(in, p);
    const std::size_t h = pnm_field(in, p);
    const std::size_t maxval = pnm_field(in, p);
    if (maxval != 255) fail(p, "only maxval 255 is supported");
    if (w == 0 || h == 0) fail(p, "empty image");
    in.get();  // single whitespace before the raster
    std::vector<std::uint8_t> px(w * h * channels);
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (static_cast<std::size_t>(in.gcount()) != px.size()) fail(p, "truncated raster");
    return from_bytes(px, h, w, channels);
}

void save_pnm(const Tensor4& img, const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(p, "cannot write image");
    const Shape s = img.shape();
    out << (s.c == 3 ? "P6" : "P5") << '\n' << s.w << ' ' << s.h << "\n255\n";
    const auto px = to_bytes(img);
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) fail(p, "write failed");
}

Tensor4 load_png(const std::filesystem::path& p) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, p.c_str())) {
        fail(p, std::string("cannot read PNG: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(p, "corrupt PNG: " + msg);
    }
    return from_bytes(px, image.height, image.width, 3);
}

void save_png(const Tensor4& img, const std::filesystem::path& p) {
    const Shape s = img.shape();
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(s.w);
    image.height = static_cast<png_uint_32>(s.h);
    image.format = s.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const auto px = to_bytes(img);
    if (!png_image_write_to_file(&image, p.c_str(), 0, px.data(), 0, nullptr)) {
        fail(p, std::string("cannot write PNG: ") + image.message);
    }
}

}  // namespace

std::uint8_t quantize(double v) {
    if (!(v > 0.0)) return 0;  // also maps NaN to 0
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

Tensor4 load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail(path, "no such file");
    const std::string ext = lower_ext(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return load_pnm(path);
    fail(path, "unsupported image format '" + ext + "' (use .png, .ppm or .pgm)");
}

void save_image(const Tensor4& image, const std::filesystem::path& path) {
    const Shape s = image.shape();
    if (s.n != 1 || (s.c != 1 && s.c != 3) || s.h == 0 || s.w == 0) {
        fail(path, "can only save (1,1,h,w) or (1,3,h,w) images, got " + s.str());
    }
    const std::string ext = lower_ext(path);
    if (ext == ".png") return save_png(image, path);
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return save_pnm(image, path);
    fail(path, "unsupported image format '" + ext + "' (use .png, .ppm or .pgm)");
}

}  // namespace hazelab::io
