#include "hazelab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hazelab {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor4::Tensor4(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor4::Tensor4(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.numel()) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_.str());
    }
}

double Tensor4::item() const {
    if (data_.size() != 1) {
        throw std::invalid_argument("item() needs a single-element tensor, got shape " + shape_.str());
    }
    return data_[0];
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor4::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor4 Tensor4::sample(std::size_t n) const {
    if (n >= shape_.n) throw std::out_of_range("sample index out of range");
    const std::size_t len = shape_.c * shape_.plane();
    std::vector<double> out(data_.begin() + n * len, data_.begin() + (n + 1) * len);
    return Tensor4({1, shape_.c, shape_.h, shape_.w}, std::move(out));
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                                    b.shape().str());
    }
}

double dot(const Tensor4& a, const Tensor4& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor4 stack(std::span<const Tensor4> samples) {
    if (samples.empty()) throw std::invalid_argument("stack: no samples");
    const Shape s0 = samples.front().shape();
    if (s0.n != 1) throw std::invalid_argument("stack: samples must have batch 1, got " + s0.str());
    std::vector<double> out;
    out.reserve(s0.numel() * samples.size());
    for (const auto& t : samples) {
        if (t.shape() != s0) {
            throw std::invalid_argument("stack: shape mismatch " + s0.str() + " vs " + t.shape().str());
        }
        out.insert(out.end(), t.data().begin(), t.data().end());
    }
    return Tensor4({samples.size(), s0.c, s0.h, s0.w}, std::move(out));
}

Tensor4 to_signed(const Tensor4& unit) {
    Tensor4 out(unit.shape());
    for (std::size_t i = 0; i < unit.size(); ++i) out[i] = unit[i] * 2.0 - 1.0;
    return out;
}

Tensor4 to_unit(const Tensor4& signed_img) {
    Tensor4 out(signed_img.shape());
    for (std::size_t i = 0; i < signed_img.size(); ++i) out[i] = (signed_img[i] + 1.0) * 0.5;
    return out;
}

}  // namespace hazelab
